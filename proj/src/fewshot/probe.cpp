// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/fewshot/probe.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <unordered_map>

#include "dafkit/errors.hpp"
#include "dafkit/io/hash.hpp"

namespace dafkit {

namespace {

// Content-addressed feature cache with exact-image verification on hits.
class FeatureCache {
 public:
  explicit FeatureCache(const FeatureExtractor& ext) : ext_(ext) {}

  const std::vector<double>& get(const ImageTensor& image) {
    const uint64_t key = fnv1a64_bytes(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(image.data.data()),
        image.data.size() * sizeof(double)));
    auto& bucket = cache_[key];
    for (auto& [img, feat] : bucket)
      if (img == image) return feat;
    bucket.emplace_back(image, ext_.extract(image));
    return bucket.back().second;
  }

 private:
  const FeatureExtractor& ext_;
  std::unordered_map<uint64_t,
                     std::vector<std::pair<ImageTensor, std::vector<double>>>>
      cache_;
};

}  // namespace

int LinearProbe::predict(const std::vector<double>& feature) const {
  const std::vector<double> logits = head.forward(feature);
  int argmax = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i)
    if (logits[i] > logits[argmax]) argmax = i;
  return argmax;
}

ProbeResult train_probe(LinearProbe& probe, const BatchSource& batches,
                        const std::vector<std::pair<ImageTensor, int>>& val,
                        const ProbeConfig& cfg) {
  if (probe.extractor == nullptr)
    throw std::invalid_argument("train_probe: missing extractor");
  if (val.empty())
    throw std::invalid_argument("train_probe: empty validation set");

  FeatureCache cache(*probe.extractor);

  auto evaluate = [&]() {
    int correct = 0;
    for (const auto& [image, label] : val)
      if (probe.predict(cache.get(image)) == label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(val.size());
  };

  std::vector<ParamRef> slots = {
      {"head.w", &probe.head.weight, {probe.head.out_dim, probe.head.in_dim}},
      {"head.b", &probe.head.bias, {probe.head.out_dim}}};
  Adam opt(cfg.lr);

  ProbeResult result;
  result.initial_accuracy = evaluate();
  result.best_accuracy = result.initial_accuracy;
  result.steps_to_best = 0;
  Linear best_head = probe.head;

  const int n_classes = probe.head.out_dim;
  for (int step = 1; step <= cfg.steps; ++step) {
    const auto batch = batches(step);
    if (batch.empty()) throw std::invalid_argument("train_probe: empty batch");

    std::vector<std::vector<double>> grads = {
        std::vector<double>(probe.head.weight.size(), 0.0),
        std::vector<double>(probe.head.bias.size(), 0.0)};
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;

    for (const auto& [image, label] : batch) {
      if (label < 0 || label >= n_classes)
        throw std::invalid_argument("train_probe: label outside class range");
      const std::vector<double>& feat = cache.get(image);
      const std::vector<double> logits = probe.head.forward(feat);

      double mx = logits[0];
      for (double v : logits) mx = std::max(mx, v);
      double z = 0.0;
      for (double v : logits) z += std::exp(v - mx);
      const double log_z = std::log(z) + mx;
      loss += (log_z - logits[label]) * inv_batch;

      std::vector<double> g_logits(logits.size());
      for (size_t i = 0; i < logits.size(); ++i) {
        const double p = std::exp(logits[i] - log_z);
        g_logits[i] =
            (p - (static_cast<int>(i) == label ? 1.0 : 0.0)) * inv_batch;
      }
      probe.head.backward(feat, g_logits, nullptr, &grads[0], &grads[1]);
    }
    if (!std::isfinite(loss))
      throw TrainingDivergence(step, "non-finite probe loss");
    opt.step(slots, grads);

    if (step % cfg.eval_interval == 0 || step == cfg.steps) {
      const double acc = evaluate();
      if (acc > result.best_accuracy) {
        result.best_accuracy = acc;
        result.steps_to_best = step;
        best_head = probe.head;
      }
    }
  }
  probe.head = best_head;
  return result;
}

}  // namespace dafkit
