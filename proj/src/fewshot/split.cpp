// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/fewshot/split.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dafkit/rng.hpp"

namespace dafkit {

int label_from_masks(const std::vector<std::pair<int, MaskTensor>>& masks) {
  if (masks.empty())
    throw std::invalid_argument("label_from_masks: empty mask list");
  int best_class = 0;
  long best_area = -1;
  for (const auto& [cls, mask] : masks) {
    long area = 0;
    for (double v : mask.data) area += (v > 0.5) ? 1 : 0;
    if (area > best_area || (area == best_area && cls < best_class)) {
      best_area = area;
      best_class = cls;
    }
  }
  return best_class;
}

FewShotSplit make_split(const std::vector<DatasetRecord>& dataset, int q,
                        uint64_t seed, double validation_fraction) {
  if (q < 1) throw std::invalid_argument("make_split: q must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("make_split: bad validation fraction");

  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i)
    by_class[dataset[i].label].push_back(i);

  FewShotSplit split;
  split.q = q;
  for (const auto& [cls, indices] : by_class) {
    const int n = static_cast<int>(indices.size());
    const int n_val = std::max(1, static_cast<int>(
                                      std::llround(n * validation_fraction)));
    const int n_pool = n - n_val;
    if (n_pool < q)
      throw std::invalid_argument("make_split: class " + std::to_string(cls) +
                                  " has only " + std::to_string(n_pool) +
                                  " training candidates for q = " +
                                  std::to_string(q));
    for (int k = n_pool; k < n; ++k) split.validation.push_back(indices[k]);

    // Partial Fisher-Yates over the training pool.
    std::vector<int> pool(indices.begin(), indices.begin() + n_pool);
    RngStream rng(seed, "split", static_cast<uint64_t>(cls));
    for (int k = 0; k < q; ++k) {
      const int pick =
          k + static_cast<int>(rng.uniform_index(pool.size() - k));
      std::swap(pool[k], pool[pick]);
    }
    pool.resize(q);
    std::sort(pool.begin(), pool.end());
    split.train[cls] = std::move(pool);
  }
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

}  // namespace dafkit
