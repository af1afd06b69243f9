// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "dafkit/tensor.hpp"

namespace dafkit {

// A labelled image, optionally with per-class segmentation masks.
struct DatasetRecord {
  ImageTensor image;
  int label = -1;
  std::vector<std::pair<int, MaskTensor>> masks;

  // The mask belonging to the record's own class, or null.
  const MaskTensor* own_mask() const {
    for (const auto& [cls, mask] : masks)
      if (cls == label) return &mask;
    return nullptr;
  }
};

}  // namespace dafkit
