// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dafkit/fewshot/experiment.hpp"

namespace dafkit {

// Run configuration. The [table1] section mirrors the stock hyperparameter
// sheet key for key; other sections size the desk-scale components. Unknown
// keys are rejected on parse. TOML is the primary format (flat sections,
// scalar and single-line array values); .json files with the same section
// layout are accepted as an alternative.
struct ConfigDoc {
  // [table1]
  double synthetic_probability_alpha = 0.5;
  int stacked_augmentations_k = 4;
  std::string activation_probabilities = "1/k";
  int synthetic_images_per_real = 10;
  std::string token_initialization = "null";
  double textual_inversion_learning_rate = 0.0005;
  int textual_inversion_batch_size = 4;
  int textual_inversion_training_steps = 1000;
  double real_guidance_strength_t0 = 0.5;
  int denoising_steps = 1000;
  double guidance_scale = 7.5;
  int resolution = 32;
  double classifier_learning_rate = 0.0001;
  int classifier_batch_size = 32;
  int classifier_training_steps = 10000;
  int classifier_eval_interval = 200;

  // [diffusion]
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::vector<int> channels = {32, 64, 64};
  int cond_dim = 16;
  int sin_dim = 16;

  // [backbone_training]
  double backbone_learning_rate = 1e-3;
  int backbone_batch_size = 8;
  int backbone_steps = 4000;
  double backbone_uncond_prob = 0.1;

  struct DatasetSection {
    int classes = 4;
    int images_per_class = 40;
    std::vector<std::string> families;  // empty = canonical order
    int background_palette = 6;
    double texture_noise = 0.04;
    double color_jitter = 1.0;
    double distractor_prob = 0.25;
  };

  // [dataset]
  std::string dataset_name = "toy4";
  DatasetSection dataset;
  // [pretrain_dataset]
  DatasetSection pretrain = {8, 64, {}, 6, 0.04, 1.0, 0.25};
  // [extractor_dataset]
  DatasetSection extractor_dataset = {
      4, 80, {"ring", "diamond", "bar_h", "bar_v"}, 6, 0.04, 1.0, 0.25};

  // [extractor]
  std::vector<int> extractor_channels = {16, 32, 64};
  double extractor_learning_rate = 1e-3;
  int extractor_batch_size = 16;
  int extractor_steps = 1500;

  // [experiment]
  std::vector<int> q_grid = {1, 2, 4, 8, 16};
  int trials = 8;
  std::vector<std::string> methods = {"baseline", "real-guidance",
                                      "dafusion-k4"};
  uint64_t seed = 0;
  int workers = 1;
  std::string flips = "h";  // "h" or "hv"
  double flip_prob = 0.5;
  int mask_dilation = 16;
  std::string granularity = "pooled";  // "pooled" | "specific"

  // [paths]
  std::string backbone_checkpoint;  // empty = train when --auto is given

  std::string dump_toml() const;

  static ConfigDoc parse_toml(const std::string& text);
  static ConfigDoc parse_json(const std::string& text);
  static ConfigDoc parse_file(const std::filesystem::path& path);

  // Library-level experiment configuration with all seeds/paths resolved.
  ExperimentConfig to_experiment_config() const;
};

}  // namespace dafkit
