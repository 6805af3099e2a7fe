#include "splatforge/io/obj.hpp"

#include <array>
#include <charconv>
#include <vector>

#include "splatforge/io/ply.hpp"

namespace splatforge::io {

namespace {

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T number(std::string_view tok, std::size_t line_no) {
  T v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc())
    throw Error(ErrorKind::Parse, "OBJ line " + std::to_string(line_no) + ": bad number '" +
                                      std::string(tok) + "'");
  return v;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text) {
  std::vector<std::array<float, 3>> verts;
  std::vector<std::array<float, 3>> colors;
  std::vector<std::array<int, 3>> tris;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto w = words(line);
    if (w.empty() || w[0][0] == '#') continue;

    if (w[0] == "v") {
      if (w.size() < 4) throw Error(ErrorKind::Parse, "OBJ line " + std::to_string(line_no) + ": short vertex");
      verts.push_back({number<float>(w[1], line_no), number<float>(w[2], line_no),
                       number<float>(w[3], line_no)});
      if (w.size() >= 7)
        colors.push_back({number<float>(w[4], line_no), number<float>(w[5], line_no),
                          number<float>(w[6], line_no)});
    } else if (w[0] == "f") {
      std::vector<int> idx;
      for (std::size_t k = 1; k < w.size(); ++k) {
        const std::string_view tok = w[k].substr(0, w[k].find('/'));
        int i = number<int>(tok, line_no);
        i = i < 0 ? static_cast<int>(verts.size()) + i : i - 1;
        idx.push_back(i);
      }
      if (idx.size() < 3) throw Error(ErrorKind::Parse, "OBJ line " + std::to_string(line_no) + ": face with < 3 vertices");
      for (std::size_t k = 2; k < idx.size(); ++k) tris.push_back({idx[0], idx[k - 1], idx[k]});
    }
  }

  TriangleMesh mesh;
  mesh.vertices.resize(static_cast<Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i)
    mesh.vertices.row(static_cast<Index>(i)) << verts[i][0], verts[i][1], verts[i][2];
  if (!colors.empty() && colors.size() == verts.size()) {
    Rows3<float> c(static_cast<Index>(colors.size()), 3);
    for (std::size_t i = 0; i < colors.size(); ++i)
      c.row(static_cast<Index>(i)) << colors[i][0], colors[i][1], colors[i][2];
    mesh.vertex_colors = c.cwiseMax(0.0f).cwiseMin(1.0f);
  }
  mesh.faces.resize(static_cast<Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i)
    mesh.faces.row(static_cast<Index>(i)) << tris[i][0], tris[i][1], tris[i][2];
  mesh.validate();
  return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  return parse_obj(read_file(path));
}

}  // namespace splatforge::io
