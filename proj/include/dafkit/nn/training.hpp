// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <vector>

#include "dafkit/nn/concept_table.hpp"
#include "dafkit/nn/epsilon_net.hpp"
#include "dafkit/rng.hpp"
#include "dafkit/schedule.hpp"

namespace dafkit {

// One item of a denoising loss batch. The tag addresses the item's noise
// stream, so a batch permuted together with its tags evaluates to the
// identical loss.
struct LossItem {
  const ImageTensor* x0 = nullptr;
  int concept_id = ConceptTable::kNullId;
  uint64_t tag = 0;
};

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 8;
  int steps = 1000;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Probability of swapping an item's concept for the null embedding during
  // backbone pretraining; keeps unconditional predictions trained so that
  // guidance has both branches.
  double uncond_prob = 0.1;
};

struct FinetuneConfig {
  double lr = 0.0005;
  int batch_size = 4;
  int steps = 1000;
  uint64_t seed = 0;
  ConceptTable::Granularity granularity = ConceptTable::Granularity::per_class;
};

// Denoising objective: mean over the batch of || eps - eps_hat(x_t, t) ||^2
// with t uniform in 1..T and eps standard normal, both drawn from the item's
// stream rng.child("item", tag). Conditioning comes from each item's concept
// embedding.
double loss_simple(const NoisePredictor& net, const ConceptTable& table,
                   const std::vector<LossItem>& batch,
                   const NoiseSchedule& schedule, const RngStream& rng);

// Same objective with gradients. Embedding gradients accumulate per concept
// id. want_theta=false computes only embedding gradients.
double loss_simple_with_grads(const EpsilonNet& net, const ConceptTable& table,
                              const std::vector<LossItem>& batch,
                              const NoiseSchedule& schedule,
                              const RngStream& rng, EpsilonNet::Grads* theta,
                              std::map<int, std::vector<double>>* emb_grads,
                              bool want_theta = true);

struct TrainItem {
  ImageTensor image;
  int concept_id = ConceptTable::kNullId;
};

// Backbone pretraining: Adam over theta and every trainable table entry.
// Deterministic given cfg.seed. Throws TrainingDivergence on non-finite loss.
EpsilonNet train_denoiser(const std::vector<TrainItem>& dataset,
                          EpsilonNet net, ConceptTable& table,
                          const NoiseSchedule& schedule,
                          const TrainConfig& cfg);

// Textual-inversion analog: the net is frozen (taken const), only targeted
// concept embeddings move. Per-class granularity tunes one embedding per
// class on that class's images; per-image tunes one embedding per image on
// the image plus its 90/180/270 rotations and horizontal/vertical flips.
// New embeddings are initialized from the null embedding. steps = 0 returns
// the table untouched. Returns the ids that were (or would be) tuned.
struct FinetuneResult {
  ConceptTable table;
  // class id -> tuned embedding ids (one for per-class granularity, one per
  // image for per-image granularity, ordered by image index).
  std::map<int, std::vector<int>> tuned_ids;
};
FinetuneResult finetune_concepts(
    const EpsilonNet& net, const ConceptTable& table,
    const std::map<int, std::vector<const ImageTensor*>>& class_images,
    const NoiseSchedule& schedule, const FinetuneConfig& cfg);

// Central finite differences against the analytic gradient over >= n_theta
// random theta coordinates and every coordinate of the first item's concept
// embedding. Relative error uses |a - f| / max(|a|, |f|, 1e-3). 64-bit only.
double gradient_check(const EpsilonNet& net, const ConceptTable& table,
                      const std::vector<LossItem>& batch,
                      const NoiseSchedule& schedule, const RngStream& rng,
                      double step_size = 1e-5, int n_theta = 60);

}  // namespace dafkit
