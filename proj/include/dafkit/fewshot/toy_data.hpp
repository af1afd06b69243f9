// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dafkit/augment/dataset.hpp"

namespace dafkit {

// Procedural shape/texture families. Shape classes are separated by family;
// the speckle/blotch pair differs only in texture statistics (the
// low-contrast discrimination setting).
enum class ShapeFamily {
  circle,
  square,
  triangle,
  cross,
  ring,
  diamond,
  bar_h,
  bar_v,
  speckle,
  blotch,
};

ShapeFamily shape_family_from_string(const std::string& name);
std::string to_string(ShapeFamily family);

struct ToyDatasetSpec {
  int classes = 4;
  int images_per_class = 40;
  int resolution = 32;
  // One family per class; defaults to the canonical order above.
  std::vector<ShapeFamily> families;
  // Distinct background anchor colors, shared by all classes.
  int background_palette = 6;
  double texture_noise = 0.04;
  // Scales the spread of per-image shape/background color variation.
  double color_jitter = 1.0;
  // Probability of adding a smaller distractor shape of another class.
  double distractor_prob = 0.25;
  bool emit_masks = true;
  uint64_t seed = 0;
};

// Deterministic per seed. Every record carries a foreground mask (between
// 5% and 60% of pixels) when emission is on; labels come from the largest
// mask. Pixel values sit on the 8-bit grid.
std::vector<DatasetRecord> gen_toy_dataset(const ToyDatasetSpec& spec);

}  // namespace dafkit
