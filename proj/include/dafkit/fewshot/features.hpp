// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dafkit/augment/dataset.hpp"
#include "dafkit/nn/layers.hpp"
#include "dafkit/rng.hpp"

namespace dafkit {

// Frozen feature backbone for the linear probe: three stride-2 convolutions
// with SiLU. Features concatenate the globally averaged mid-level and
// top-level activations; mid-level statistics transfer better across shape
// families than the top level alone. Pretrained as a classifier on a set of
// procedural classes disjoint from the evaluation classes.
class FeatureExtractor {
 public:
  struct Config {
    int in_channels = 3;
    int c1 = 16;
    int c2 = 32;
    int c3 = 64;
  };

  FeatureExtractor(const Config& cfg, RngStream init_rng);

  int feature_dim() const { return cfg_.c2 + cfg_.c3; }
  const Config& config() const { return cfg_; }

  std::vector<double> extract(const ImageTensor& image) const;

  std::vector<ParamRef> params();
  std::vector<ConstParamRef> params() const;

  bool same_parameters(const FeatureExtractor& other) const;

 private:
  friend struct ExtractorTrainer;
  Config cfg_;
  Conv2D e1_, e2_, e3_;
};

struct ExtractorTrainConfig {
  double lr = 1e-3;
  int batch_size = 16;
  int steps = 1500;
  uint64_t seed = 0;
  // Random mirror augmentation during pretraining.
  double flip_prob = 0.5;
  // Per-image Gaussian pixel noise of strength U(0, noise_aug) during
  // pretraining; keeps the frozen features usable on generated images,
  // which carry mild sampling artifacts.
  double noise_aug = 0.15;
};

// Softmax-CE classification pretraining over (image, label) records with a
// throwaway linear head. Returns the trained extractor and its final
// training accuracy over the last 200 steps (coarse sanity signal).
struct ExtractorTrainResult {
  FeatureExtractor extractor;
  double final_train_accuracy = 0.0;
};
ExtractorTrainResult train_feature_extractor(
    const std::vector<DatasetRecord>& dataset, int n_classes,
    const FeatureExtractor::Config& net_cfg, const ExtractorTrainConfig& cfg);

}  // namespace dafkit
