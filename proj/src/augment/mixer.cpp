// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/augment/mixer.hpp"

#include <stdexcept>

namespace dafkit {

std::vector<BatchSlot> balanced_batch(const std::vector<DatasetRecord>& real,
                                      const SyntheticStore& store,
                                      const MixerConfig& mix, RngStream& rng) {
  if (real.empty())
    throw std::invalid_argument("balanced_batch: empty dataset");
  if (!(mix.alpha >= 0.0 && mix.alpha <= 1.0))
    throw std::invalid_argument("balanced_batch: alpha outside [0, 1]");
  if (mix.batch_size < 1)
    throw std::invalid_argument("balanced_batch: batch size must be >= 1");
  if (store.n() != static_cast<int>(real.size()))
    throw std::invalid_argument("balanced_batch: store does not match dataset");
  if (!store.complete())
    throw std::invalid_argument("balanced_batch: store is incomplete");

  std::vector<BatchSlot> batch;
  batch.reserve(mix.batch_size);
  for (int s = 0; s < mix.batch_size; ++s) {
    const int i = static_cast<int>(rng.uniform_index(real.size()));
    const int j = static_cast<int>(rng.uniform_index(store.m()));
    const bool is_real = rng.uniform() < (1.0 - mix.alpha);
    BatchSlot slot;
    slot.i = i;
    slot.j = j;
    slot.synthetic = !is_real;
    if (is_real) {
      slot.image = &real[i].image;
      slot.label = real[i].label;
    } else {
      const StoreRecord& rec = store.at(i, j);
      slot.image = &rec.image;
      slot.label = rec.label;
    }
    batch.push_back(slot);
  }
  return batch;
}

}  // namespace dafkit
