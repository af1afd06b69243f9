// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/fewshot/features.hpp"

#include <cmath>
#include <stdexcept>

#include "dafkit/errors.hpp"
#include "dafkit/image_ops.hpp"

namespace dafkit {

namespace {

// Channel means over the spatial extent, appended to `out`.
void global_average(const ImageTensor& x, std::vector<double>& out) {
  const size_t base = out.size();
  out.resize(base + x.channels, 0.0);
  const double inv = 1.0 / (static_cast<double>(x.height) * x.width);
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx)
      for (int c = 0; c < x.channels; ++c)
        out[base + c] += x.at(y, xx, c) * inv;
}

}  // namespace

FeatureExtractor::FeatureExtractor(const Config& cfg, RngStream init_rng)
    : cfg_(cfg),
      e1_(cfg.in_channels, cfg.c1, 3, 2, 1),
      e2_(cfg.c1, cfg.c2, 3, 2, 1),
      e3_(cfg.c2, cfg.c3, 3, 2, 1) {
  e1_.init(init_rng.child("e1"));
  e2_.init(init_rng.child("e2"));
  e3_.init(init_rng.child("e3"));
}

std::vector<double> FeatureExtractor::extract(const ImageTensor& image) const {
  const ImageTensor a = silu_forward(e1_.forward(image));
  const ImageTensor b = silu_forward(e2_.forward(a));
  const ImageTensor c = silu_forward(e3_.forward(b));
  std::vector<double> f;
  f.reserve(feature_dim());
  global_average(b, f);
  global_average(c, f);
  return f;
}

std::vector<ParamRef> FeatureExtractor::params() {
  auto conv = [](const char* n, Conv2D& c, std::vector<ParamRef>& out) {
    out.push_back({std::string(n) + ".w", &c.weight,
                   {c.out_ch, c.ksize, c.ksize, c.in_ch}});
    out.push_back({std::string(n) + ".b", &c.bias, {c.out_ch}});
  };
  std::vector<ParamRef> out;
  conv("e1", e1_, out);
  conv("e2", e2_, out);
  conv("e3", e3_, out);
  return out;
}

std::vector<ConstParamRef> FeatureExtractor::params() const {
  std::vector<ConstParamRef> out;
  for (const auto& p : const_cast<FeatureExtractor*>(this)->params())
    out.push_back({p.name, p.data, p.shape});
  return out;
}

bool FeatureExtractor::same_parameters(const FeatureExtractor& other) const {
  const auto a = params();
  const auto b = other.params();
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (*a[i].data != *b[i].data) return false;
  return true;
}

// Holds the head and runs taped forward/backward through the extractor.
struct ExtractorTrainer {
  FeatureExtractor& net;
  Linear head;

  double item_pass(const ImageTensor& image, int label, double inv_batch,
                   std::vector<std::vector<double>>& grads,
                   std::vector<double>& g_head_w,
                   std::vector<double>& g_head_b, bool& correct) {
    const ImageTensor a0 = net.e1_.forward(image);
    const ImageTensor a1 = silu_forward(a0);
    const ImageTensor b0 = net.e2_.forward(a1);
    const ImageTensor b1 = silu_forward(b0);
    const ImageTensor c0 = net.e3_.forward(b1);
    const ImageTensor c1 = silu_forward(c0);

    std::vector<double> feat;
    feat.reserve(net.feature_dim());
    global_average(b1, feat);
    global_average(c1, feat);

    const std::vector<double> logits = head.forward(feat);

    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    const double log_z = std::log(z) + mx;
    const double loss = log_z - logits[label];

    int argmax = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i)
      if (logits[i] > logits[argmax]) argmax = i;
    correct = argmax == label;

    std::vector<double> g_logits(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
      const double p = std::exp(logits[i] - log_z);
      g_logits[i] =
          (p - (static_cast<int>(i) == label ? 1.0 : 0.0)) * inv_batch;
    }

    std::vector<double> g_feat(net.feature_dim(), 0.0);
    head.backward(feat, g_logits, &g_feat, &g_head_w, &g_head_b);

    // Split the feature gradient back onto both pooled levels.
    const int c2 = net.cfg_.c2;
    const int c3 = net.cfg_.c3;
    ImageTensor g_c1(c1.height, c1.width, c1.channels);
    const double inv3 = 1.0 / (static_cast<double>(c1.height) * c1.width);
    for (int y = 0; y < c1.height; ++y)
      for (int x = 0; x < c1.width; ++x)
        for (int ch = 0; ch < c3; ++ch)
          g_c1.at(y, x, ch) = g_feat[c2 + ch] * inv3;

    ImageTensor g_c0(c0.height, c0.width, c0.channels);
    silu_backward(c0, g_c1, g_c0);
    ImageTensor g_b1(b1.height, b1.width, b1.channels);
    net.e3_.backward(b1, g_c0, &g_b1, &grads[4], &grads[5]);

    const double inv2 = 1.0 / (static_cast<double>(b1.height) * b1.width);
    for (int y = 0; y < b1.height; ++y)
      for (int x = 0; x < b1.width; ++x)
        for (int ch = 0; ch < c2; ++ch)
          g_b1.at(y, x, ch) += g_feat[ch] * inv2;

    ImageTensor g_b0(b0.height, b0.width, b0.channels);
    silu_backward(b0, g_b1, g_b0);
    ImageTensor g_a1(a1.height, a1.width, a1.channels);
    net.e2_.backward(a1, g_b0, &g_a1, &grads[2], &grads[3]);
    ImageTensor g_a0(a0.height, a0.width, a0.channels);
    silu_backward(a0, g_a1, g_a0);
    net.e1_.backward(image, g_a0, nullptr, &grads[0], &grads[1]);

    return loss;
  }
};

ExtractorTrainResult train_feature_extractor(
    const std::vector<DatasetRecord>& dataset, int n_classes,
    const FeatureExtractor::Config& net_cfg, const ExtractorTrainConfig& cfg) {
  if (dataset.empty())
    throw std::invalid_argument("train_feature_extractor: empty dataset");

  const RngStream root(cfg.seed, "extractor");
  FeatureExtractor net(net_cfg, root.child("init"));
  ExtractorTrainer trainer{net, Linear(net.feature_dim(), n_classes)};
  trainer.head.init(root.child("head"));

  std::vector<ParamRef> slots = net.params();
  slots.push_back({"head.w", &trainer.head.weight,
                   {trainer.head.out_dim, trainer.head.in_dim}});
  slots.push_back({"head.b", &trainer.head.bias, {trainer.head.out_dim}});

  Adam opt(cfg.lr);
  int recent_correct = 0, recent_total = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    RngStream batch_rng = root.child("batch", static_cast<uint64_t>(step));
    std::vector<std::vector<double>> grads;
    for (const auto& s : slots) grads.emplace_back(s.data->size(), 0.0);
    std::vector<double>& g_head_w = grads[grads.size() - 2];
    std::vector<double>& g_head_b = grads[grads.size() - 1];

    double loss = 0.0;
    const double inv_batch = 1.0 / cfg.batch_size;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& rec = dataset[batch_rng.uniform_index(dataset.size())];
      if (rec.label < 0 || rec.label >= n_classes)
        throw std::invalid_argument(
            "train_feature_extractor: label outside class range");
      ImageTensor img = rec.image;
      if (batch_rng.uniform() < cfg.flip_prob) img = mirror_horizontal(img);
      if (batch_rng.uniform() < cfg.flip_prob) img = mirror_vertical(img);
      if (cfg.noise_aug > 0.0) {
        const double sigma = cfg.noise_aug * batch_rng.uniform();
        for (double& v : img.data)
          v = std::clamp(v + sigma * batch_rng.normal(), -1.0, 1.0);
      }
      bool correct = false;
      // grads layout: e1.w e1.b e2.w e2.b e3.w e3.b head.w head.b
      loss += inv_batch * trainer.item_pass(img, rec.label, inv_batch, grads,
                                            g_head_w, g_head_b, correct);
      if (cfg.steps - step <= 200) {
        recent_correct += correct ? 1 : 0;
        ++recent_total;
      }
    }
    if (!std::isfinite(loss))
      throw TrainingDivergence(step, "non-finite extractor loss");
    opt.step(slots, grads);
  }

  ExtractorTrainResult result{std::move(net), 0.0};
  if (recent_total > 0)
    result.final_train_accuracy =
        static_cast<double>(recent_correct) / recent_total;
  return result;
}

}  // namespace dafkit
