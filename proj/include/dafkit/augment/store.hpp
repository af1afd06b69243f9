// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dafkit/augment/dataset.hpp"
#include "dafkit/augment/policy.hpp"
#include "dafkit/nn/concept_table.hpp"
#include "dafkit/nn/epsilon_net.hpp"
#include "dafkit/sampler.hpp"
#include "dafkit/schedule.hpp"

namespace dafkit {

// Everything a generative policy entry needs to run.
struct GenerationContext {
  const NoisePredictor* net = nullptr;
  const ConceptTable* table = nullptr;
  const NoiseSchedule* schedule = nullptr;
  SamplerConfig sampler;
  // Object masks are dilated by this Chebyshev radius before use.
  int mask_dilation = 16;
};

// One source image for augmentation: the image, its label, the concept
// embedding used to condition generation, and an optional object mask.
struct StoreSource {
  ImageTensor image;
  int label = -1;
  int concept_id = ConceptTable::kNullId;
  std::optional<MaskTensor> mask;
};

// The j-th stored augmentation of real image i, with full provenance.
struct StoreRecord {
  int i = 0;
  int j = 0;
  int label = -1;
  int policy_entry = 0;
  double t0 = 0.0;
  uint64_t seed = 0;
  int concept_id = ConceptTable::kNullId;
  std::string status;  // "ok" or "error: ..."
  ImageTensor image;   // values on the 8-bit pixel grid

  bool ok() const { return status == "ok"; }
};

// N x M augmentations. Complete when every record generated cleanly.
class SyntheticStore {
 public:
  SyntheticStore() = default;
  SyntheticStore(int n, int m) : n_(n), m_(m) {
    records_.resize(static_cast<size_t>(n) * m);
  }

  int n() const { return n_; }
  int m() const { return m_; }

  StoreRecord& at(int i, int j) {
    return records_[static_cast<size_t>(i) * m_ + j];
  }
  const StoreRecord& at(int i, int j) const {
    return records_[static_cast<size_t>(i) * m_ + j];
  }

  const std::vector<StoreRecord>& records() const { return records_; }

  bool complete() const;

  // Layout: <dir>/<label>/<i>/aug_<j>.png plus <dir>/manifest.json. The
  // manifest is the source of truth for completeness.
  void save(const std::filesystem::path& dir) const;
  static SyntheticStore load(const std::filesystem::path& dir);

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<StoreRecord> records_;
};

// Generates M augmentations per source. Record (i, j) derives all its
// randomness from (seed, "store", i, j), so records are independent of
// generation order and of the worker count. Generation failures are
// recorded per record and leave the store incomplete.
//
// When `resume_dir` is set, records whose PNG already exists under it are
// decoded from disk instead of regenerated.
SyntheticStore build_store(const std::vector<StoreSource>& sources,
                           const AugmentationPolicy& policy, int m,
                           const GenerationContext& ctx, uint64_t seed,
                           int workers = 1,
                           const std::filesystem::path* resume_dir = nullptr);

// Identity store: M copies of each source, no generation involved.
SyntheticStore identity_store(const std::vector<StoreSource>& sources, int m);

}  // namespace dafkit
