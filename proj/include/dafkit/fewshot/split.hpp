// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <utility>
#include <vector>

#include "dafkit/augment/dataset.hpp"

namespace dafkit {

// Class of the mask with the most pixels; ties break toward the lowest
// class id.
int label_from_masks(const std::vector<std::pair<int, MaskTensor>>& masks);

// q-shot split: q training indices per class drawn without replacement from
// each class's training pool; the validation pool is the fixed per-class
// tail (about 20%) of the dataset, independent of q and seed.
struct FewShotSplit {
  int q = 0;
  std::map<int, std::vector<int>> train;  // class id -> q dataset indices
  std::vector<int> validation;            // dataset indices
};

FewShotSplit make_split(const std::vector<DatasetRecord>& dataset, int q,
                        uint64_t seed, double validation_fraction = 0.2);

}  // namespace dafkit
