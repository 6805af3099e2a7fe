#include "splatforge/io/ply.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "splatforge/io/obj.hpp"

namespace splatforge::io {

namespace {

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::Parse, "PLY parse error at byte " + std::to_string(offset) + ": " + what);
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

bool parse_type(const std::string& s, PlyType& out) {
  static const std::pair<const char*, PlyType> table[] = {
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
      {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
      {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
      {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
      {"float64", PlyType::Float64}};
  for (const auto& [name, type] : table)
    if (s == name) {
      out = type;
      return true;
    }
  return false;
}

template <typename T>
T load(const char* p, bool swap) {
  T v;
  if (!swap) {
    std::memcpy(&v, p, sizeof(T));
    return v;
  }
  char buf[sizeof(T)];
  std::reverse_copy(p, p + sizeof(T), buf);
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

double load_binary(PlyType t, const char* p, bool swap) {
  switch (t) {
    case PlyType::Int8: return load<std::int8_t>(p, swap);
    case PlyType::UInt8: return load<std::uint8_t>(p, swap);
    case PlyType::Int16: return load<std::int16_t>(p, swap);
    case PlyType::UInt16: return load<std::uint16_t>(p, swap);
    case PlyType::Int32: return load<std::int32_t>(p, swap);
    case PlyType::UInt32: return load<std::uint32_t>(p, swap);
    case PlyType::Float32: return load<float>(p, swap);
    case PlyType::Float64: return load<double>(p, swap);
  }
  return 0.0;
}

class Cursor {
 public:
  Cursor(std::span<const char> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) parse_fail(pos_, "unexpected end of data");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  // ASCII token; skips whitespace including newlines.
  std::string_view token() {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) parse_fail(start, "unexpected end of data");
    return {bytes_.data() + start, pos_ - start};
  }

  double ascii_number() {
    const std::string_view tok = token();
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      parse_fail(pos_ - tok.size(), "bad number '" + std::string(tok) + "'");
    return v;
  }

 private:
  std::span<const char> bytes_;
  std::size_t pos_;
};

std::vector<std::string> split(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

std::string format_line(PlyFormat f) {
  switch (f) {
    case PlyFormat::Ascii: return "format ascii 1.0\n";
    case PlyFormat::BinaryLittleEndian: return "format binary_little_endian 1.0\n";
    case PlyFormat::BinaryBigEndian: break;
  }
  throw Error(ErrorKind::InvalidParameter, "writing big-endian PLY is not supported");
}

std::string float_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Rows3<float> read_xyz(const PlyElement& v) {
  for (const char* p : {"x", "y", "z"})
    if (!v.has(p)) throw Error(ErrorKind::MissingAttribute, std::string("PLY vertex lacks ") + p);
  Rows3<float> out(static_cast<Index>(v.count), 3);
  const auto& x = v.column("x");
  const auto& y = v.column("y");
  const auto& z = v.column("z");
  for (std::size_t i = 0; i < v.count; ++i)
    out.row(static_cast<Index>(i)) << float(x[i]), float(y[i]), float(z[i]);
  return out;
}

std::optional<Rows3<float>> read_rgb(const PlyElement& v) {
  const char* names[3] = {"red", "green", "blue"};
  if (!v.has("red") || !v.has("green") || !v.has("blue")) {
    if (v.has("r") && v.has("g") && v.has("b")) {
      names[0] = "r";
      names[1] = "g";
      names[2] = "b";
    } else {
      return std::nullopt;
    }
  }
  Rows3<float> out(static_cast<Index>(v.count), 3);
  for (int c = 0; c < 3; ++c) {
    const PlyProperty& prop = v.properties[static_cast<std::size_t>(v.find(names[c]))];
    const bool is_float = prop.type == PlyType::Float32 || prop.type == PlyType::Float64;
    const double scale = is_float ? 1.0 : (prop.type == PlyType::UInt16 ? 65535.0 : 255.0);
    const auto& col = v.column(names[c]);
    for (std::size_t i = 0; i < v.count; ++i)
      out(static_cast<Index>(i), c) = std::clamp(float(col[i] / scale), 0.0f, 1.0f);
  }
  return out;
}

}  // namespace

int PlyElement::find(const std::string& property) const {
  for (std::size_t i = 0; i < properties.size(); ++i)
    if (properties[i].name == property) return static_cast<int>(i);
  return -1;
}

const std::vector<double>& PlyElement::column(const std::string& property) const {
  const int i = find(property);
  if (i < 0 || properties[static_cast<std::size_t>(i)].is_list)
    throw Error(ErrorKind::MissingAttribute,
                "PLY element '" + name + "' has no scalar property '" + property + "'");
  return scalars[static_cast<std::size_t>(i)];
}

const PlyElement* PlyData::find(const std::string& element) const {
  for (const auto& e : elements)
    if (e.name == element) return &e;
  return nullptr;
}

PlyData parse_ply(std::span<const char> bytes) {
  PlyData ply;
  std::size_t pos = 0;
  auto next_line = [&](std::size_t& line_start) {
    line_start = pos;
    const char* begin = bytes.data() + pos;
    const char* end = static_cast<const char*>(std::memchr(begin, '\n', bytes.size() - pos));
    if (!end) parse_fail(pos, "header not terminated by end_header");
    std::string line(begin, end);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = static_cast<std::size_t>(end - bytes.data()) + 1;
    return line;
  };

  std::size_t line_start = 0;
  if (bytes.size() < 4 || next_line(line_start) != "ply") parse_fail(0, "missing 'ply' magic");

  bool have_format = false;
  for (;;) {
    const std::string line = next_line(line_start);
    const auto words = split(line);
    if (words.empty()) continue;
    const std::string& kw = words[0];
    if (kw == "end_header") break;
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (words.size() < 2) parse_fail(line_start, "bad format line");
      if (words[1] == "ascii") ply.format = PlyFormat::Ascii;
      else if (words[1] == "binary_little_endian") ply.format = PlyFormat::BinaryLittleEndian;
      else if (words[1] == "binary_big_endian") ply.format = PlyFormat::BinaryBigEndian;
      else parse_fail(line_start, "unknown format '" + words[1] + "'");
      have_format = true;
    } else if (kw == "element") {
      if (words.size() != 3) parse_fail(line_start, "bad element line");
      PlyElement e;
      e.name = words[1];
      std::size_t count = 0;
      const auto res = std::from_chars(words[2].data(), words[2].data() + words[2].size(), count);
      if (res.ec != std::errc()) parse_fail(line_start, "bad element count");
      e.count = count;
      ply.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (ply.elements.empty()) parse_fail(line_start, "property before element");
      PlyProperty p;
      if (words.size() == 5 && words[1] == "list") {
        p.is_list = true;
        if (!parse_type(words[2], p.count_type) || !parse_type(words[3], p.type))
          parse_fail(line_start, "bad list property types");
        p.name = words[4];
      } else if (words.size() == 3) {
        if (!parse_type(words[1], p.type)) parse_fail(line_start, "unknown type '" + words[1] + "'");
        p.name = words[2];
      } else {
        parse_fail(line_start, "bad property line");
      }
      ply.elements.back().properties.push_back(p);
    } else {
      parse_fail(line_start, "unknown header keyword '" + kw + "'");
    }
  }
  if (!have_format) parse_fail(0, "missing format line");

  Cursor cur(bytes, pos);
  const bool swap = (ply.format == PlyFormat::BinaryBigEndian) !=
                    (std::endian::native == std::endian::big);
  for (auto& e : ply.elements) {
    const std::size_t np = e.properties.size();
    e.scalars.assign(np, {});
    e.list_values.assign(np, {});
    e.list_offsets.assign(np, {});
    for (std::size_t p = 0; p < np; ++p) {
      if (e.properties[p].is_list) e.list_offsets[p].reserve(e.count + 1), e.list_offsets[p].push_back(0);
      else e.scalars[p].reserve(e.count);
    }
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t p = 0; p < np; ++p) {
        const PlyProperty& prop = e.properties[p];
        auto read_one = [&](PlyType t) {
          if (ply.format == PlyFormat::Ascii) return cur.ascii_number();
          return load_binary(t, cur.take(type_size(t)), swap);
        };
        if (prop.is_list) {
          const std::size_t at = cur.pos();
          const double n = read_one(prop.count_type);
          if (n < 0 || n != std::floor(n)) parse_fail(at, "bad list length");
          for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k)
            e.list_values[p].push_back(static_cast<std::int64_t>(read_one(prop.type)));
          e.list_offsets[p].push_back(e.list_values[p].size());
        } else {
          e.scalars[p].push_back(read_one(prop.type));
        }
      }
    }
  }
  return ply;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

PlyData read_ply(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return parse_ply(bytes);
}

TriangleMesh mesh_from_ply(const PlyData& ply) {
  const PlyElement* v = ply.find("vertex");
  if (!v) throw Error(ErrorKind::MissingAttribute, "PLY has no vertex element");
  TriangleMesh mesh;
  mesh.vertices = read_xyz(*v);
  mesh.vertex_colors = read_rgb(*v);

  std::vector<std::array<int, 3>> tris;
  if (const PlyElement* f = ply.find("face")) {
    int idx = f->find("vertex_indices");
    if (idx < 0) idx = f->find("vertex_index");
    if (idx < 0 || !f->properties[static_cast<std::size_t>(idx)].is_list)
      throw Error(ErrorKind::MissingAttribute, "PLY face element lacks vertex_indices");
    const auto& offs = f->list_offsets[static_cast<std::size_t>(idx)];
    const auto& vals = f->list_values[static_cast<std::size_t>(idx)];
    for (std::size_t i = 0; i < f->count; ++i)
      for (std::size_t k = offs[i] + 2; k < offs[i + 1]; ++k)  // fan
        tris.push_back({int(vals[offs[i]]), int(vals[k - 1]), int(vals[k])});
  }
  mesh.faces.resize(static_cast<Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i)
    mesh.faces.row(static_cast<Index>(i)) << tris[i][0], tris[i][1], tris[i][2];
  mesh.validate();
  return mesh;
}

ColoredPointCloud point_cloud_from_ply(const PlyData& ply) {
  const PlyElement* v = ply.find("vertex");
  if (!v) throw Error(ErrorKind::MissingAttribute, "PLY has no vertex element");
  auto colors = read_rgb(*v);
  if (!colors) throw Error(ErrorKind::MissingAttribute, "PLY vertices have no colors");
  return {read_xyz(*v), std::move(*colors)};
}

namespace {

std::string vertex_block(const Rows3<float>& pos, const Rows3<float>* colors,
                         PlyFormat format, ColorEncoding enc) {
  std::string out;
  for (Index i = 0; i < pos.rows(); ++i) {
    if (format == PlyFormat::Ascii) {
      out += float_text(pos(i, 0)) + " " + float_text(pos(i, 1)) + " " + float_text(pos(i, 2));
      if (colors)
        for (int c = 0; c < 3; ++c)
          out += " " + (enc == ColorEncoding::UInt8
                            ? std::to_string(int(std::lround((*colors)(i, c) * 255.0f)))
                            : float_text((*colors)(i, c)));
      out += "\n";
    } else {
      for (int c = 0; c < 3; ++c) put<float>(out, pos(i, c));
      if (colors)
        for (int c = 0; c < 3; ++c) {
          if (enc == ColorEncoding::UInt8)
            put<std::uint8_t>(out, std::uint8_t(std::lround(std::clamp((*colors)(i, c), 0.0f, 1.0f) * 255.0f)));
          else
            put<float>(out, (*colors)(i, c));
        }
    }
  }
  return out;
}

std::string vertex_header(Index n, bool colors, ColorEncoding enc) {
  std::string h = "element vertex " + std::to_string(n) +
                  "\nproperty float x\nproperty float y\nproperty float z\n";
  if (colors) {
    const char* t = enc == ColorEncoding::UInt8 ? "uchar" : "float";
    for (const char* c : {"red", "green", "blue"}) h += std::string("property ") + t + " " + c + "\n";
  }
  return h;
}

}  // namespace

std::string encode_point_cloud_ply(const ColoredPointCloud& cloud, PlyFormat format,
                                   ColorEncoding colors) {
  std::string out = "ply\n" + format_line(format) + vertex_header(cloud.size(), true, colors) +
                    "end_header\n";
  out += vertex_block(cloud.positions, &cloud.colors, format, colors);
  return out;
}

std::string encode_mesh_ply(const TriangleMesh& mesh, PlyFormat format) {
  const bool has_colors = mesh.vertex_colors.has_value();
  std::string out = "ply\n" + format_line(format) +
                    vertex_header(mesh.vertices.rows(), has_colors, ColorEncoding::UInt8) +
                    "element face " + std::to_string(mesh.faces.rows()) +
                    "\nproperty list uchar int vertex_indices\nend_header\n";
  out += vertex_block(mesh.vertices, has_colors ? &*mesh.vertex_colors : nullptr, format,
                      ColorEncoding::UInt8);
  for (Index f = 0; f < mesh.faces.rows(); ++f) {
    if (format == PlyFormat::Ascii) {
      out += "3 " + std::to_string(mesh.faces(f, 0)) + " " + std::to_string(mesh.faces(f, 1)) +
             " " + std::to_string(mesh.faces(f, 2)) + "\n";
    } else {
      put<std::uint8_t>(out, 3);
      for (int k = 0; k < 3; ++k) put<std::int32_t>(out, mesh.faces(f, k));
    }
  }
  return out;
}

std::string encode_splat_ply(const GaussianCloudf& cloud) {
  cloud.validate();
  std::string out = "ply\nformat binary_little_endian 1.0\nelement vertex " +
                    std::to_string(cloud.size()) + "\n";
  for (const char* name : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                           "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    out += std::string("property float ") + name + "\n";
  out += "end_header\n";
  out.reserve(out.size() + static_cast<std::size_t>(cloud.size()) * 14 * sizeof(float));
  for (Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) put<float>(out, cloud.positions(i, k));
    for (int k = 0; k < 3; ++k) put<float>(out, cloud.colors_dc(i, k));
    put<float>(out, cloud.opacities_raw[i]);
    for (int k = 0; k < 3; ++k) put<float>(out, cloud.scales_raw(i, k));
    for (int k = 0; k < 4; ++k) put<float>(out, cloud.rotations(i, k));
  }
  return out;
}

GaussianCloudf splat_cloud_from_ply(const PlyData& ply) {
  const PlyElement* v = ply.find("vertex");
  if (!v) throw Error(ErrorKind::MissingAttribute, "PLY has no vertex element");
  GaussianCloudf cloud(static_cast<Index>(v->count));
  auto fill = [&](auto& table, std::initializer_list<const char*> names) {
    int k = 0;
    for (const char* name : names) {
      const auto& col = v->column(name);
      for (std::size_t i = 0; i < v->count; ++i) table(static_cast<Index>(i), k) = float(col[i]);
      ++k;
    }
  };
  fill(cloud.positions, {"x", "y", "z"});
  fill(cloud.colors_dc, {"f_dc_0", "f_dc_1", "f_dc_2"});
  fill(cloud.opacities_raw, {"opacity"});
  fill(cloud.scales_raw, {"scale_0", "scale_1", "scale_2"});
  fill(cloud.rotations, {"rot_0", "rot_1", "rot_2", "rot_3"});
  cloud.validate();
  return cloud;
}

void write_point_cloud_ply(const std::filesystem::path& path, const ColoredPointCloud& cloud,
                           PlyFormat format, ColorEncoding colors) {
  write_file(path, encode_point_cloud_ply(cloud, format, colors));
}

void write_mesh_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
                    PlyFormat format) {
  write_file(path, encode_mesh_ply(mesh, format));
}

void write_splat_ply(const std::filesystem::path& path, const GaussianCloudf& cloud) {
  write_file(path, encode_splat_ply(cloud));
}

GaussianCloudf read_splat_ply(const std::filesystem::path& path) {
  return splat_cloud_from_ply(read_ply(path));
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return read_obj(path);
  return mesh_from_ply(read_ply(path));
}

}  // namespace splatforge::io
