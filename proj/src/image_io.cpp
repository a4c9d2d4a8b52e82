#include "transtext/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace transtext {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return f;
}

void write_png(const std::filesystem::path& path, std::size_t h, std::size_t w, int channels,
               const std::vector<png_byte>& pixels) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = w * static_cast<std::size_t>(channels);
  for (std::size_t y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbFrame read_rgb_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto w = png_get_image_width(png, info);
  const auto h = png_get_image_height(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<png_byte> row(png_get_rowbytes(png, info));
  RgbFrame out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = from_byte(row[x * 3 + c]);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_rgb_png(const std::filesystem::path& path, const RgbFrame& frame) {
  std::vector<png_byte> pixels(frame.plane() * 3);
  for (std::size_t y = 0; y < frame.height; ++y) {
    for (std::size_t x = 0; x < frame.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) pixels[(y * frame.width + x) * 3 + c] = to_byte(frame.at(c, y, x));
    }
  }
  write_png(path, frame.height, frame.width, 3, pixels);
}

void write_rgba_png(const std::filesystem::path& path, const RgbFrame& straight, const AlphaMatte& alpha) {
  if (straight.height != alpha.height || straight.width != alpha.width) {
    throw std::invalid_argument("write_rgba_png: colour and alpha sizes differ");
  }
  std::vector<png_byte> pixels(straight.plane() * 4);
  for (std::size_t y = 0; y < straight.height; ++y) {
    for (std::size_t x = 0; x < straight.width; ++x) {
      const std::size_t o = (y * straight.width + x) * 4;
      for (std::size_t c = 0; c < 3; ++c) pixels[o + c] = to_byte(straight.at(c, y, x));
      pixels[o + 3] = to_byte(alpha.at(y, x));
    }
  }
  write_png(path, straight.height, straight.width, 4, pixels);
}

RgbFrame unpremultiply(const RgbFrame& premultiplied, const AlphaMatte& alpha) {
  RgbFrame out(premultiplied.height, premultiplied.width);
  const std::size_t n = out.plane();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = alpha.data[i];
      out.data[c * n + i] = a > 0.0 ? std::clamp(premultiplied.data[c * n + i] / a, 0.0, 1.0) : 0.0;
    }
  }
  return out;
}

}  // namespace transtext
