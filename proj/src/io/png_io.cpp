// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/io/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "dafkit/io/atomic_file.hpp"

namespace dafkit {

namespace {

struct MemReader {
  const unsigned char* data;
  size_t size;
  size_t pos;
};

void read_fn(png_structp png, png_bytep out, png_size_t count) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + count > r->size)
    png_error(png, "unexpected end of PNG data");
  std::memcpy(out, r->data + r->pos, count);
  r->pos += count;
}

void write_fn(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void flush_fn(png_structp) {}

std::vector<unsigned char> encode_gray_or_rgb(
    const std::vector<unsigned char>& pixels, int height, int width,
    int channels) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }

  std::vector<unsigned char> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode failed");
  }

  png_set_write_fn(png, &out, write_fn, flush_fn);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_bytep> rows(height);
  const size_t row_bytes = static_cast<size_t>(width) * channels;
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(&pixels[y * row_bytes]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void decode_to_bytes(const std::vector<unsigned char>& bytes,
                     std::vector<unsigned char>& pixels, int& height,
                     int& width, int& channels) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("PNG decode failed");
  }

  MemReader reader{bytes.data(), bytes.size(), 0};
  png_set_read_fn(png, &reader, read_fn);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  // Normalize everything to 8-bit gray or RGB.
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int out_channels = static_cast<int>(png_get_channels(png, info));
  if (out_channels != 1 && out_channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("PNG decode: unsupported channel count");
  }

  height = static_cast<int>(h);
  width = static_cast<int>(w);
  channels = out_channels;
  pixels.resize(static_cast<size_t>(h) * w * out_channels);
  std::vector<png_bytep> rows(h);
  const size_t row_bytes = static_cast<size_t>(w) * out_channels;
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = &pixels[y * row_bytes];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace

std::vector<unsigned char> encode_png(const ImageTensor& image) {
  if (image.channels != 1 && image.channels != 3)
    throw std::invalid_argument("encode_png: channels must be 1 or 3");
  std::vector<unsigned char> pixels(image.data.size());
  for (size_t i = 0; i < image.data.size(); ++i)
    pixels[i] = real_to_pixel(image.data[i]);
  return encode_gray_or_rgb(pixels, image.height, image.width, image.channels);
}

ImageTensor decode_png(const std::vector<unsigned char>& bytes) {
  std::vector<unsigned char> pixels;
  int h = 0, w = 0, c = 0;
  decode_to_bytes(bytes, pixels, h, w, c);
  ImageTensor img(h, w, c);
  for (size_t i = 0; i < pixels.size(); ++i)
    img.data[i] = pixel_to_real(pixels[i]);
  return img;
}

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  atomic_write_file(path, encode_png(image));
}

ImageTensor read_png(const std::filesystem::path& path) {
  return decode_png(read_file_bytes(path));
}

void write_mask_png(const std::filesystem::path& path,
                    const MaskTensor& mask) {
  if (!mask.in_range())
    throw std::invalid_argument("write_mask_png: values outside [0, 1]");
  std::vector<unsigned char> pixels(mask.data.size());
  for (size_t i = 0; i < mask.data.size(); ++i)
    pixels[i] = static_cast<unsigned char>(std::llround(mask.data[i] * 255.0));
  atomic_write_file(
      path, encode_gray_or_rgb(pixels, mask.height, mask.width, 1));
}

MaskTensor read_mask_png(const std::filesystem::path& path) {
  std::vector<unsigned char> pixels;
  int h = 0, w = 0, c = 0;
  decode_to_bytes(read_file_bytes(path), pixels, h, w, c);
  if (c != 1) throw std::runtime_error("read_mask_png: expected grayscale");
  MaskTensor mask(h, w);
  for (size_t i = 0; i < pixels.size(); ++i) mask.data[i] = pixels[i] / 255.0;
  return mask;
}

}  // namespace dafkit
