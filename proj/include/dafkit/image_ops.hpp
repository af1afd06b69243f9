// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dafkit/tensor.hpp"

namespace dafkit {

// Pixel-exact mirrors and quarter-turn rotations.

inline ImageTensor mirror_horizontal(const ImageTensor& x) {
  ImageTensor y(x.height, x.width, x.channels);
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c)
      for (int ch = 0; ch < x.channels; ++ch)
        y.at(r, c, ch) = x.at(r, x.width - 1 - c, ch);
  return y;
}

inline ImageTensor mirror_vertical(const ImageTensor& x) {
  ImageTensor y(x.height, x.width, x.channels);
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c)
      for (int ch = 0; ch < x.channels; ++ch)
        y.at(r, c, ch) = x.at(x.height - 1 - r, c, ch);
  return y;
}

// 90 degrees counter-clockwise.
inline ImageTensor rotate90(const ImageTensor& x) {
  ImageTensor y(x.width, x.height, x.channels);
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c)
      for (int ch = 0; ch < x.channels; ++ch)
        y.at(x.width - 1 - c, r, ch) = x.at(r, c, ch);
  return y;
}

inline ImageTensor rotate180(const ImageTensor& x) {
  ImageTensor y(x.height, x.width, x.channels);
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c)
      for (int ch = 0; ch < x.channels; ++ch)
        y.at(x.height - 1 - r, x.width - 1 - c, ch) = x.at(r, c, ch);
  return y;
}

inline ImageTensor rotate270(const ImageTensor& x) {
  return rotate90(rotate180(x));
}

}  // namespace dafkit
