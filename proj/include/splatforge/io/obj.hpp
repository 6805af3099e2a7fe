#pragma once

#include <filesystem>
#include <string_view>

#include "splatforge/core/types.hpp"

namespace splatforge::io {

/// Wavefront OBJ subset: `v x y z [r g b]` and `f` records (polygons are
/// fan-triangulated, negative indices allowed). Vertex colors are kept only
/// when every vertex carries them.
TriangleMesh parse_obj(std::string_view text);
TriangleMesh read_obj(const std::filesystem::path& path);

}  // namespace splatforge::io
