// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dafkit/augment/dataset.hpp"
#include "dafkit/augment/store.hpp"
#include "dafkit/rng.hpp"

namespace dafkit {

struct MixerConfig {
  // Probability that a slot is filled with a synthetic image.
  double alpha = 0.5;
  int batch_size = 32;
};

struct BatchSlot {
  const ImageTensor* image = nullptr;
  int label = -1;
  bool synthetic = false;
  int i = 0;  // real image index
  int j = 0;  // augmentation index (meaningful when synthetic)
};

// Fills batch_size slots: i ~ U{0..N-1}, j ~ U{0..M-1}, then the real image
// with probability (1 - alpha), else its j-th augmentation. Labels follow
// the source image. Slot images point into `real` / `store`.
std::vector<BatchSlot> balanced_batch(const std::vector<DatasetRecord>& real,
                                      const SyntheticStore& store,
                                      const MixerConfig& mix, RngStream& rng);

}  // namespace dafkit
