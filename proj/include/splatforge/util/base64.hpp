#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace splatforge::util {

/// RFC 4648 standard alphabet with padding.
std::string base64_encode(std::string_view bytes);
/// Throws Error(Parse) on characters outside the alphabet or bad padding.
std::string base64_decode(std::string_view text);

/// Little-endian float32 byte strings.
std::string float32_le_bytes(std::span<const float> values);
std::vector<float> floats_from_float32_le(std::string_view bytes);

}  // namespace splatforge::util
