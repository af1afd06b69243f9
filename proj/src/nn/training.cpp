// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/nn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dafkit/errors.hpp"
#include "dafkit/image_ops.hpp"

namespace dafkit {

namespace {

struct ItemDraw {
  int t;
  ImageTensor eps;
};

ItemDraw draw_for_item(const LossItem& item, const NoiseSchedule& schedule,
                       const RngStream& rng) {
  RngStream stream = rng.child("item", item.tag);
  ItemDraw d;
  d.t = stream.uniform_timestep(schedule.T());
  d.eps = stream.normal_image(item.x0->height, item.x0->width,
                              item.x0->channels);
  return d;
}

// Kahan-compensated sum of squared residuals.
double squared_error(const ImageTensor& eps, const ImageTensor& pred) {
  double sum = 0.0, comp = 0.0;
  for (size_t i = 0; i < eps.data.size(); ++i) {
    const double r = eps.data[i] - pred.data[i];
    const double term = r * r - comp;
    const double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  return sum;
}

// Processing order is canonicalized by tag so the loss (and accumulated
// gradients) do not depend on how the caller ordered the batch.
std::vector<size_t> canonical_order(const std::vector<LossItem>& batch) {
  std::vector<size_t> order(batch.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return batch[a].tag < batch[b].tag; });
  return order;
}

void validate_batch(const std::vector<LossItem>& batch,
                    const ConceptTable& table) {
  if (batch.empty())
    throw std::invalid_argument("loss_simple: batch must be non-empty");
  for (const auto& item : batch) {
    if (item.x0 == nullptr)
      throw std::invalid_argument("loss_simple: null image in batch");
    table.embedding(item.concept_id);  // throws on unknown id
  }
}

}  // namespace

double loss_simple(const NoisePredictor& net, const ConceptTable& table,
                   const std::vector<LossItem>& batch,
                   const NoiseSchedule& schedule, const RngStream& rng) {
  validate_batch(batch, table);
  double total = 0.0;
  for (size_t idx : canonical_order(batch)) {
    const LossItem& item = batch[idx];
    const ItemDraw d = draw_for_item(item, schedule, rng);
    const ImageTensor x_t = forward_sample(*item.x0, d.t, d.eps, schedule);
    const ImageTensor pred =
        net.predict_noise(x_t, d.t, table.embedding(item.concept_id));
    total += squared_error(d.eps, pred);
  }
  return total / static_cast<double>(batch.size());
}

double loss_simple_with_grads(const EpsilonNet& net, const ConceptTable& table,
                              const std::vector<LossItem>& batch,
                              const NoiseSchedule& schedule,
                              const RngStream& rng, EpsilonNet::Grads* theta,
                              std::map<int, std::vector<double>>* emb_grads,
                              bool want_theta) {
  validate_batch(batch, table);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (size_t idx : canonical_order(batch)) {
    const LossItem& item = batch[idx];
    const ItemDraw d = draw_for_item(item, schedule, rng);
    const ImageTensor x_t = forward_sample(*item.x0, d.t, d.eps, schedule);

    std::unique_ptr<EpsilonNet::Tape> tape;
    const ImageTensor pred =
        net.forward_taped(x_t, d.t, table.embedding(item.concept_id), tape);
    total += squared_error(d.eps, pred);

    ImageTensor grad_out(pred.height, pred.width, pred.channels);
    for (size_t i = 0; i < pred.data.size(); ++i)
      grad_out.data[i] = 2.0 * (pred.data[i] - d.eps.data[i]) * inv_b;

    EpsilonNet::Grads item_grads = net.zero_grads();
    net.backward(*tape, grad_out, item_grads, want_theta && theta != nullptr);

    if (theta && want_theta) {
      for (size_t p = 0; p < theta->theta.size(); ++p)
        for (size_t j = 0; j < theta->theta[p].size(); ++j)
          theta->theta[p][j] += item_grads.theta[p][j];
    }
    if (emb_grads) {
      auto [it, inserted] = emb_grads->try_emplace(
          item.concept_id, std::vector<double>(table.dim(), 0.0));
      for (int j = 0; j < table.dim(); ++j) it->second[j] += item_grads.w[j];
    }
  }
  return total * inv_b;
}

EpsilonNet train_denoiser(const std::vector<TrainItem>& dataset,
                          EpsilonNet net, ConceptTable& table,
                          const NoiseSchedule& schedule,
                          const TrainConfig& cfg) {
  if (dataset.empty())
    throw std::invalid_argument("train_denoiser: dataset must be non-empty");
  if (cfg.batch_size < 1 || cfg.lr <= 0.0)
    throw std::invalid_argument("train_denoiser: invalid config");
  for (const auto& item : dataset) table.embedding(item.concept_id);

  // Optimizer slots: theta arrays first, then every trainable embedding.
  std::vector<ParamRef> slots = net.params();
  const size_t n_theta = slots.size();
  std::vector<int> trainable_ids;
  for (int id = 0; id < table.size(); ++id) {
    if (table.entry(id).trainable) {
      trainable_ids.push_back(id);
      slots.push_back({"embedding:" + table.entry(id).name,
                       &table.mutable_embedding(id),
                       {table.dim()}});
    }
  }

  Adam opt(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  const RngStream root(cfg.seed, "train_denoiser");

  for (int step = 0; step < cfg.steps; ++step) {
    RngStream batch_rng = root.child("batch", static_cast<uint64_t>(step));
    std::vector<LossItem> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const uint64_t idx = batch_rng.uniform_index(dataset.size());
      int cid = dataset[idx].concept_id;
      if (batch_rng.uniform() < cfg.uncond_prob) cid = ConceptTable::kNullId;
      batch.push_back({&dataset[idx].image, cid, idx});
    }

    EpsilonNet::Grads theta = net.zero_grads();
    std::map<int, std::vector<double>> emb;
    const double loss = loss_simple_with_grads(
        net, table, batch, schedule, root.child("draw", step), &theta, &emb);
    if (!std::isfinite(loss))
      throw TrainingDivergence(step, "non-finite loss");

    std::vector<std::vector<double>> grads = std::move(theta.theta);
    grads.resize(slots.size());
    for (size_t k = 0; k < trainable_ids.size(); ++k) {
      auto it = emb.find(trainable_ids[k]);
      grads[n_theta + k] = it != emb.end()
                               ? std::move(it->second)
                               : std::vector<double>(table.dim(), 0.0);
    }
    opt.step(slots, grads);
  }

  if (!net.parameters_finite())
    throw TrainingDivergence(cfg.steps, "non-finite parameters");
  return net;
}

namespace {

// One embedding tuned against a fixed image set, net frozen.
void tune_embedding(const EpsilonNet& net, ConceptTable& table, int target_id,
                    const std::vector<ImageTensor>& images,
                    const NoiseSchedule& schedule, const FinetuneConfig& cfg,
                    const RngStream& root) {
  std::vector<ParamRef> slot = {{"embedding",
                                 &table.mutable_embedding(target_id),
                                 {table.dim()}}};
  Adam opt(cfg.lr);
  for (int step = 0; step < cfg.steps; ++step) {
    RngStream batch_rng = root.child("batch", static_cast<uint64_t>(step));
    std::vector<LossItem> batch;
    const int bsz = cfg.batch_size;
    batch.reserve(bsz);
    for (int b = 0; b < bsz; ++b) {
      const uint64_t idx = batch_rng.uniform_index(images.size());
      batch.push_back({&images[idx], target_id, idx});
    }
    std::map<int, std::vector<double>> emb;
    const double loss =
        loss_simple_with_grads(net, table, batch, schedule,
                               root.child("draw", step), nullptr, &emb, false);
    if (!std::isfinite(loss))
      throw TrainingDivergence(step, "non-finite fine-tuning loss");
    opt.step(slot, {std::move(emb.at(target_id))});
  }
}

}  // namespace

FinetuneResult finetune_concepts(
    const EpsilonNet& net, const ConceptTable& table,
    const std::map<int, std::vector<const ImageTensor*>>& class_images,
    const NoiseSchedule& schedule, const FinetuneConfig& cfg) {
  for (const auto& [cid, images] : class_images)
    if (images.empty())
      throw std::invalid_argument("finetune_concepts: class " +
                                  std::to_string(cid) + " has no images");

  FinetuneResult result{table, {}};
  if (cfg.steps == 0) return result;
  result.table.set_granularity(cfg.granularity);

  const RngStream root(cfg.seed, "finetune");
  for (const auto& [cid, images] : class_images) {
    if (cfg.granularity == ConceptTable::Granularity::per_class) {
      const int id =
          result.table.add_from_null("class:" + std::to_string(cid));
      std::vector<ImageTensor> set;
      set.reserve(images.size());
      for (const ImageTensor* img : images) set.push_back(*img);
      tune_embedding(net, result.table, id, set, schedule, cfg,
                     root.child("class", static_cast<uint64_t>(cid)));
      result.tuned_ids[cid] = {id};
    } else {
      for (size_t k = 0; k < images.size(); ++k) {
        const int id = result.table.add_from_null(
            "image:" + std::to_string(cid) + ":" + std::to_string(k));
        const ImageTensor& img = *images[k];
        // The image plus quarter-turn rotations and both mirror flips.
        std::vector<ImageTensor> set = {img,
                                        rotate90(img),
                                        rotate180(img),
                                        rotate270(img),
                                        mirror_horizontal(img),
                                        mirror_vertical(img)};
        tune_embedding(net, result.table, id, set, schedule, cfg,
                       root.child("image", static_cast<uint64_t>(cid), k));
        result.tuned_ids[cid].push_back(id);
      }
    }
  }
  return result;
}

double gradient_check(const EpsilonNet& net, const ConceptTable& table,
                      const std::vector<LossItem>& batch,
                      const NoiseSchedule& schedule, const RngStream& rng,
                      double step_size, int n_theta) {
  EpsilonNet net_copy = net;
  ConceptTable table_copy = table;
  const RngStream draws = rng.child("draws");

  EpsilonNet::Grads analytic = net_copy.zero_grads();
  std::map<int, std::vector<double>> emb_grads;
  loss_simple_with_grads(net_copy, table_copy, batch, schedule, draws,
                         &analytic, &emb_grads);

  auto relative_error = [](double a, double f) {
    return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-3});
  };

  auto fd_loss = [&]() {
    return loss_simple(net_copy, table_copy, batch, schedule, draws);
  };

  double max_err = 0.0;
  RngStream pick = rng.child("coords");
  std::vector<ParamRef> params = net_copy.params();
  for (int k = 0; k < n_theta; ++k) {
    const size_t p = pick.uniform_index(params.size());
    const size_t j = pick.uniform_index(params[p].data->size());
    double& coord = (*params[p].data)[j];
    const double saved = coord;
    coord = saved + step_size;
    const double up = fd_loss();
    coord = saved - step_size;
    const double down = fd_loss();
    coord = saved;
    const double fd = (up - down) / (2.0 * step_size);
    max_err = std::max(max_err, relative_error(analytic.theta[p][j], fd));
  }

  const int concept_id = batch.front().concept_id;
  std::vector<double>& w = table_copy.mutable_embedding(concept_id);
  const std::vector<double>& g_w = emb_grads.at(concept_id);
  for (int j = 0; j < table_copy.dim(); ++j) {
    const double saved = w[j];
    w[j] = saved + step_size;
    const double up = fd_loss();
    w[j] = saved - step_size;
    const double down = fd_loss();
    w[j] = saved;
    const double fd = (up - down) / (2.0 * step_size);
    max_err = std::max(max_err, relative_error(g_w[j], fd));
  }
  return max_err;
}

}  // namespace dafkit
