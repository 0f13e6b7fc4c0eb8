#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

// Reads an 8-bit PNG into a [0,1] frame. Gray -> 1 channel, RGB(A) -> 3
// channels (alpha dropped); 16-bit files are narrowed to 8 bits.
inline Frame load_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("load_png: cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("load_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("load_png: png_create_info_struct failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("load_png: failed to decode " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) row_ptrs[y] = raw.data() + y * rowbytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Frame out(static_cast<int>(height), static_cast<int>(width), channels == 1 ? 1 : 3);
  for (int y = 0; y < out.h; ++y) {
    const unsigned char* row = raw.data() + static_cast<std::size_t>(y) * rowbytes;
    for (int x = 0; x < out.w; ++x) {
      for (int ch = 0; ch < out.c; ++ch) {
        out.at(y, x, ch) = static_cast<float>(row[x * channels + ch]) / 255.0f;
      }
    }
  }
  return out;
}

// Writes a [0,1] frame as an 8-bit PNG (1 channel -> gray, 3 -> RGB).
// Values are clamped and rounded; encoder settings are fixed so identical
// frames produce identical bytes.
inline void save_png(const std::filesystem::path& path, const Frame& frame) {
  if (frame.c != 1 && frame.c != 3) {
    throw InputDomainError("save_png: frame must have 1 or 3 channels, got " + frame.shape_str());
  }
  if (frame.h < 1 || frame.w < 1) throw InputDomainError("save_png: empty frame");

  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("save_png: cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("save_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("save_png: png_create_info_struct failed");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(frame.h) * frame.w * frame.c);
  std::vector<png_bytep> row_ptrs(frame.h);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("save_png: failed to encode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, frame.w, frame.h, 8,
               frame.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  for (int y = 0; y < frame.h; ++y) {
    unsigned char* row = raw.data() + static_cast<std::size_t>(y) * frame.w * frame.c;
    for (int x = 0; x < frame.w; ++x) {
      for (int ch = 0; ch < frame.c; ++ch) {
        const float v = std::clamp(frame.at(y, x, ch), 0.0f, 1.0f);
        row[x * frame.c + ch] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
    row_ptrs[y] = row;
  }
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace crossview
