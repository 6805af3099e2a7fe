#pragma once

#include <filesystem>

#include "splatforge/core/types.hpp"

namespace splatforge::io {

/// 8-bit RGB PNG from an (H*W) x 3 row-major image in [0,1].
void write_png(const std::filesystem::path& path, const Rows3<float>& rgb, int width,
               int height);

/// Raw little-endian float32 dump (row-major, no header).
void write_raw_floats(const std::filesystem::path& path, const float* data, std::size_t count);

}  // namespace splatforge::io
