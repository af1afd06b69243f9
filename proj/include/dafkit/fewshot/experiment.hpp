// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dafkit/augment/mixer.hpp"
#include "dafkit/augment/policy.hpp"
#include "dafkit/augment/store.hpp"
#include "dafkit/fewshot/features.hpp"
#include "dafkit/fewshot/metrics.hpp"
#include "dafkit/fewshot/probe.hpp"
#include "dafkit/fewshot/split.hpp"
#include "dafkit/fewshot/toy_data.hpp"
#include "dafkit/nn/training.hpp"
#include "dafkit/sampler.hpp"

namespace dafkit {

enum class MethodKind {
  baseline,            // classic flips only, no synthetic data
  real_guidance,       // sdedit at fixed t0, null embedding
  dafusion,            // fine-tuned concepts, stacked policy
  dafusion_masked,     // dafusion through masked inpainting
  degenerate_identity  // identity policy with alpha = 0 (pipeline check)
};

struct MethodSpec {
  MethodKind kind = MethodKind::baseline;
  int k = 4;          // stacked entries (dafusion kinds)
  double t0 = 0.5;    // strength when k == 1 and for real guidance
  MaskRole mask_mode = MaskRole::none;

  std::string name() const;
  // Accepts: baseline, real-guidance, dafusion-k<N>,
  // dafusion-masked-foreground, dafusion-masked-background,
  // degenerate-identity.
  static MethodSpec parse(const std::string& text);

  bool needs_inversion() const {
    return kind == MethodKind::dafusion || kind == MethodKind::dafusion_masked;
  }
  bool uses_generation() const {
    return kind == MethodKind::real_guidance || needs_inversion();
  }
};

struct ExperimentConfig {
  std::string dataset_name = "toy4";
  ToyDatasetSpec data;
  ToyDatasetSpec pretrain_data;   // backbone universe (class-agnostic use)
  ToyDatasetSpec extractor_data;  // disjoint classes for the extractor

  int schedule_T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  EpsilonNet::Config net;
  TrainConfig backbone;
  FeatureExtractor::Config extractor_net;
  ExtractorTrainConfig extractor_train;
  FinetuneConfig inversion;
  SamplerConfig sampler;
  ProbeConfig probe;

  double alpha = 0.5;
  int store_m = 10;
  int mask_dilation = 16;
  bool vertical_flips = false;  // added for the texture-pair dataset
  double flip_prob = 0.5;

  std::vector<int> q_grid = {1, 2, 4, 8, 16};
  int trials = 8;
  std::vector<MethodSpec> methods;

  uint64_t master_seed = 0;
  int workers = 1;
};

// Backbone, concept table, schedule and feature extractor, all derived
// deterministically from the master seed.
struct TrainedStack {
  NoiseSchedule schedule;
  EpsilonNet net;
  ConceptTable table;
  FeatureExtractor extractor;
  double holdout_loss_init = 0.0;
  double holdout_loss_final = 0.0;
  double extractor_train_accuracy = 0.0;
};

TrainedStack train_stack(const ExperimentConfig& cfg);

struct CellResult {
  std::string dataset;
  std::string method;
  int q = 0;
  int trial = 0;
  double accuracy = 0.0;
  int steps_to_best = 0;
  bool ok = false;
  std::string error;
  bool index_audit_ok = false;
};

struct MethodSummary {
  std::string method;
  double auc_mean = 0.0;
  double auc_ci_low = 0.0;
  double auc_ci_high = 0.0;
  double normalized_score = 0.0;
};

struct ExperimentReport {
  std::string dataset;
  std::vector<int> q_grid;
  int trials = 0;
  std::vector<CellResult> cells;
  std::vector<MethodSummary> summaries;
  bool complete = false;

  // Accuracies over trials for one (method, q).
  std::vector<double> accuracies(const std::string& method, int q) const;
  // Mean-accuracy curve over the q grid.
  std::vector<std::pair<double, double>> curve(const std::string& method) const;
  // Per-trial AUC samples for one method.
  std::vector<double> auc_samples(const std::string& method) const;
  const MethodSummary* summary(const std::string& method) const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const TrainedStack& stack);

// One experiment cell (exposed for targeted tests).
CellResult run_cell(const ExperimentConfig& cfg, const TrainedStack& stack,
                    const std::vector<DatasetRecord>& dataset,
                    const MethodSpec& method, int q, int trial);

// Builds the report's summaries/flags from its cells (exposed for the
// report CLI which reloads cells from disk).
void summarize_report(ExperimentReport& report);

// Per-q 68% CI overlap between two methods (degeneracy and ablation use).
struct OverlapCheck {
  bool both_present = false;
  int q_overlapping = 0;
  int q_total = 0;
  bool all_overlap = false;
  bool auc_overlap = false;
};
OverlapCheck ci_overlap(const ExperimentReport& report,
                        const std::string& method_a,
                        const std::string& method_b);

// Mean pairwise L2 distance among m augmentations of each of n images,
// under the stacked k=4 policy versus the single t0=0.5 policy.
struct DiversityStats {
  double mean_pairwise_stacked = 0.0;
  double mean_pairwise_single = 0.0;
};
DiversityStats stacking_diversity(const TrainedStack& stack,
                                  const std::vector<DatasetRecord>& dataset,
                                  int n_images, int m,
                                  const SamplerConfig& sampler, uint64_t seed,
                                  int workers = 1);

}  // namespace dafkit
