// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "dafkit/fewshot/features.hpp"
#include "dafkit/nn/layers.hpp"
#include "dafkit/rng.hpp"

namespace dafkit {

// Frozen extractor plus a trainable linear head.
struct LinearProbe {
  const FeatureExtractor* extractor = nullptr;
  Linear head;

  LinearProbe(const FeatureExtractor& ext, int n_classes, RngStream init_rng)
      : extractor(&ext), head(ext.feature_dim(), n_classes) {
    head.init(init_rng);
  }

  int predict(const std::vector<double>& feature) const;
};

struct ProbeConfig {
  double lr = 0.0001;
  int batch_size = 32;
  int steps = 2000;        // desk-scale default
  int eval_interval = 200;
  uint64_t seed = 0;
};

// Produces one training batch of (image, label) pairs for the given step.
using BatchSource =
    std::function<std::vector<std::pair<ImageTensor, int>>(int step)>;

struct ProbeResult {
  double best_accuracy = 0.0;
  int steps_to_best = 0;
  double initial_accuracy = 0.0;
};

// Cross-entropy training of the head only; the extractor never changes.
// Validation accuracy is measured at step 0, every eval_interval steps and
// at the last step; the best checkpoint's accuracy is reported and the head
// is left at that checkpoint. Features are cached by image content, so
// repeated slots cost one extractor pass each.
ProbeResult train_probe(LinearProbe& probe, const BatchSource& batches,
                        const std::vector<std::pair<ImageTensor, int>>& val,
                        const ProbeConfig& cfg);

}  // namespace dafkit
