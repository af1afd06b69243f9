// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "dafkit/tensor.hpp"

namespace dafkit {

// 8-bit PNG codec. Images write as RGB (3 channels) or grayscale (1), with
// values quantized through the pixel grid; masks write as grayscale with
// 1.0 -> 255.

std::vector<unsigned char> encode_png(const ImageTensor& image);
ImageTensor decode_png(const std::vector<unsigned char>& bytes);

void write_png(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_png(const std::filesystem::path& path);

void write_mask_png(const std::filesystem::path& path, const MaskTensor& mask);
MaskTensor read_mask_png(const std::filesystem::path& path);

}  // namespace dafkit
