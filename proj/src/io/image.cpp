#include "splatforge/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "splatforge/io/ply.hpp"

namespace splatforge::io {

void write_png(const std::filesystem::path& path, const Rows3<float>& rgb, int width,
               int height) {
  if (rgb.rows() != Index(width) * height)
    throw Error(ErrorKind::InvalidParameter, "image buffer size does not match dimensions");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng failed writing '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = rgb(Index(y) * width + x, c);
        row[static_cast<std::size_t>(x) * 3 + c] =
            static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_raw_floats(const std::filesystem::path& path, const float* data, std::size_t count) {
  write_file(path, std::span<const char>(reinterpret_cast<const char*>(data), count * sizeof(float)));
}

}  // namespace splatforge::io
