#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "splatforge/core/types.hpp"

namespace splatforge::io {

enum class PlyFormat { Ascii, BinaryLittleEndian, BinaryBigEndian };
enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };
enum class ColorEncoding { UInt8, Float32 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

/// One element block. Scalar properties are widened to double (exact for
/// every PLY scalar type); list properties are stored flattened with
/// per-item offsets.
struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  std::vector<std::vector<double>> scalars;           // by property
  std::vector<std::vector<std::int64_t>> list_values;  // by property
  std::vector<std::vector<std::size_t>> list_offsets;  // count + 1 entries

  int find(const std::string& property) const;
  bool has(const std::string& property) const { return find(property) >= 0; }
  const std::vector<double>& column(const std::string& property) const;
};

struct PlyData {
  PlyFormat format = PlyFormat::BinaryLittleEndian;
  std::vector<PlyElement> elements;

  const PlyElement* find(const std::string& element) const;
};

/// Throws Error(Parse) with the byte offset of the failure.
PlyData parse_ply(std::span<const char> bytes);
PlyData read_ply(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const char> bytes);

/// Vertices (x, y, z), optional red/green/blue, optional vertex_indices faces.
TriangleMesh mesh_from_ply(const PlyData& ply);
ColoredPointCloud point_cloud_from_ply(const PlyData& ply);

std::string encode_point_cloud_ply(const ColoredPointCloud& cloud, PlyFormat format,
                                   ColorEncoding colors = ColorEncoding::UInt8);
std::string encode_mesh_ply(const TriangleMesh& mesh, PlyFormat format);

/// 3D-GS splat layout: x y z f_dc_0..2 opacity scale_0..2 rot_0..3, float32,
/// binary little endian; opacity and scales are stored pre-activation.
std::string encode_splat_ply(const GaussianCloudf& cloud);
GaussianCloudf splat_cloud_from_ply(const PlyData& ply);

void write_point_cloud_ply(const std::filesystem::path& path, const ColoredPointCloud& cloud,
                           PlyFormat format = PlyFormat::BinaryLittleEndian,
                           ColorEncoding colors = ColorEncoding::UInt8);
void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
                    PlyFormat format = PlyFormat::BinaryLittleEndian);
void write_splat_ply(const std::filesystem::path& path, const GaussianCloudf& cloud);
GaussianCloudf read_splat_ply(const std::filesystem::path& path);

/// PLY or OBJ by extension.
TriangleMesh read_mesh(const std::filesystem::path& path);

}  // namespace splatforge::io
