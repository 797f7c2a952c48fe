#pragma once

// 8-bit PNG via libpng. Values are stored as round(255 * clamp(v, 0, 1)).

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "freecure/errors.hpp"
#include "freecure/tensor.hpp"

namespace freecure::io {

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(255.0 * std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0)));
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// channels: 1 (gray) or 3 (RGB); rows are interleaved.
inline void write_png_raw(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
                          const std::vector<unsigned char>& pixels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  require(file != nullptr, ErrorKind::io, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = width * static_cast<std::size_t>(channels);
  for (std::size_t y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct RawPng {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  std::vector<unsigned char> pixels;
};

inline RawPng read_png_raw(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  require(file != nullptr, ErrorKind::io, "cannot open " + path.string());
  unsigned char sig[8];
  require(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorKind::format,
          path.string() + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::format, "libpng failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  RawPng out;
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.pixels.resize(stride * out.height);
  std::vector<png_bytep> rows(out.height);
  for (std::size_t y = 0; y < out.height; ++y) rows[y] = out.pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const Image& img) {
  require(img.channels() == 3 || img.channels() == 1, ErrorKind::invalid_argument, "PNG images need 1 or 3 channels");
  const auto c = img.channels();
  std::vector<unsigned char> px(img.size());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t k = 0; k < c; ++k) px[(y * img.width() + x) * c + k] = to_byte(img.at(k, y, x));
  detail::write_png_raw(path, img.width(), img.height(), static_cast<int>(c), px);
}

inline void write_png(const std::filesystem::path& path, const GrayMap& map) {
  std::vector<unsigned char> px(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) px[i] = to_byte(map[i]);
  detail::write_png_raw(path, map.width(), map.height(), 1, px);
}

/// Reads any 8-bit PNG as RGB in [0,1]; gray files are replicated across channels.
inline Image read_png(const std::filesystem::path& path) {
  const auto raw = detail::read_png_raw(path);
  Image img(3, raw.height, raw.width);
  const std::size_t c = static_cast<std::size_t>(raw.channels);
  for (std::size_t y = 0; y < raw.height; ++y)
    for (std::size_t x = 0; x < raw.width; ++x)
      for (std::size_t k = 0; k < 3; ++k)
        img.at(k, y, x) = raw.pixels[(y * raw.width + x) * c + (c >= 3 ? k : 0)] / 255.0;
  return img;
}

inline GrayMap read_png_gray(const std::filesystem::path& path) {
  const auto raw = detail::read_png_raw(path);
  GrayMap map(raw.height, raw.width);
  const std::size_t c = static_cast<std::size_t>(raw.channels);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = raw.pixels[i * c] / 255.0;
  return map;
}

/// Quantizes an image the way write_png stores it.
inline Image quantize(const Image& img) {
  Image out = img;
  for (auto& v : out.values()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace freecure::io
