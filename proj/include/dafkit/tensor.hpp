// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace dafkit {

// H x W x C image, row-major, values nominally in [-1, 1] for real images.
// Diffusion intermediates may drift outside that range.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, 0.0) {}

  static ImageTensor zeros(int h, int w, int c) { return ImageTensor(h, w, c); }

  double& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  size_t size() const { return data.size(); }

  bool same_shape(const ImageTensor& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const ImageTensor& o) const {
    return same_shape(o) && data == o.data;
  }
};

// H x W pixelwise mask with values in [0, 1]. 1 selects the reference branch
// in inpainting blends.
struct MaskTensor {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  MaskTensor() = default;
  MaskTensor(int h, int w)
      : height(h), width(w), data(static_cast<size_t>(h) * w, 0.0) {}

  static MaskTensor zeros(int h, int w) { return MaskTensor(h, w); }
  static MaskTensor ones(int h, int w) {
    MaskTensor m(h, w);
    std::fill(m.data.begin(), m.data.end(), 1.0);
    return m;
  }

  double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const {
    return data[static_cast<size_t>(y) * width + x];
  }

  size_t size() const { return data.size(); }

  bool in_range() const {
    for (double v : data)
      if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
  }

  bool is_binary() const {
    for (double v : data)
      if (v != 0.0 && v != 1.0) return false;
    return true;
  }

  bool operator==(const MaskTensor& o) const {
    return height == o.height && width == o.width && data == o.data;
  }
};

// 8-bit pixel p maps to 2*(p/255) - 1; the inverse clamps to [-1, 1] and
// rounds half away from zero.
inline double pixel_to_real(uint8_t p) { return 2.0 * (p / 255.0) - 1.0; }

inline uint8_t real_to_pixel(double v) {
  v = std::clamp(v, -1.0, 1.0);
  return static_cast<uint8_t>(std::llround((v + 1.0) * 0.5 * 255.0));
}

// Snaps every value onto the representable 8-bit grid. Images that pass
// through PNG files land on this grid, so generated data is snapped before
// being stored or compared.
inline void quantize_to_pixel_grid(ImageTensor& img) {
  for (double& v : img.data) v = pixel_to_real(real_to_pixel(v));
}

}  // namespace dafkit
