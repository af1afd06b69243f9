// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "dafkit/errors.hpp"

namespace dafkit {

std::vector<int> ladder_timesteps(const NoiseSchedule& schedule, int steps) {
  if (steps < 1)
    throw std::invalid_argument("ladder_timesteps: steps must be >= 1");
  if (steps > schedule.T())
    throw std::invalid_argument(
        "ladder_timesteps: steps exceed the schedule's T");
  const int stride = schedule.T() / steps;
  std::vector<int> ts(steps);
  for (int i = 0; i < steps; ++i) ts[i] = stride * (i + 1);
  return ts;
}

ImageTensor reverse_step(const ImageTensor& x_t, int t,
                         const ImageTensor& eps_hat,
                         const NoiseSchedule& schedule,
                         const ImageTensor* noise) {
  if (t < 1 || t > schedule.T())
    throw std::invalid_argument("reverse_step: t outside 1..T");
  if (!x_t.same_shape(eps_hat))
    throw std::invalid_argument("reverse_step: eps_hat shape mismatch");
  if (noise && !x_t.same_shape(*noise))
    throw std::invalid_argument("reverse_step: noise shape mismatch");

  const double beta = schedule.beta(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
  const double eps_coef = beta / std::sqrt(1.0 - schedule.alpha_bar(t));
  const double sigma = std::sqrt(beta);

  ImageTensor out(x_t.height, x_t.width, x_t.channels);
  for (size_t i = 0; i < x_t.data.size(); ++i) {
    double v = inv_sqrt_alpha * (x_t.data[i] - eps_coef * eps_hat.data[i]);
    if (noise) v += sigma * noise->data[i];
    out.data[i] = v;
  }
  return out;
}

ImageTensor guided_noise(const NoisePredictor& net, const ConceptTable& table,
                         const ImageTensor& x_t, int t, int concept_id,
                         double scale) {
  if (!std::isfinite(scale))
    throw std::invalid_argument("guided_noise: scale must be finite");
  // The endpoints return one branch exactly (and skip the other prediction).
  // A null concept makes both branches identical for every scale.
  if (scale == 0.0 || concept_id == ConceptTable::kNullId)
    return net.predict_noise(x_t, t, table.embedding(ConceptTable::kNullId));
  if (scale == 1.0)
    return net.predict_noise(x_t, t, table.embedding(concept_id));

  const ImageTensor eps_c =
      net.predict_noise(x_t, t, table.embedding(concept_id));
  const ImageTensor eps_u =
      net.predict_noise(x_t, t, table.embedding(ConceptTable::kNullId));
  ImageTensor out(x_t.height, x_t.width, x_t.channels);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = eps_u.data[i] + scale * (eps_c.data[i] - eps_u.data[i]);
  return out;
}

namespace {

// Shared reverse walk from ladder position `from` down to 1. Noise for step
// k comes from rng.child("rev", k); the final step adds none unless
// configured. Throws SamplingDivergence on non-finite intermediates.
ImageTensor reverse_from(ImageTensor x, int from, const std::vector<int>& ts,
                         const NoisePredictor& net, const ConceptTable& table,
                         const NoiseSchedule& schedule,
                         const SamplerConfig& cfg, int concept_id,
                         const RngStream& rng) {
  for (int k = from; k >= 1; --k) {
    const int t = ts[k - 1];
    const ImageTensor eps_hat =
        guided_noise(net, table, x, t, concept_id, cfg.guidance_scale);
    if (!eps_hat.all_finite())
      throw SamplingDivergence(t, "non-finite noise prediction");
    if (k > 1 || cfg.final_step_noise) {
      const ImageTensor noise =
          rng.child("rev", static_cast<uint64_t>(k))
              .normal_image(x.height, x.width, x.channels);
      x = reverse_step(x, t, eps_hat, schedule, &noise);
    } else {
      x = reverse_step(x, t, eps_hat, schedule, nullptr);
    }
    if (!x.all_finite())
      throw SamplingDivergence(t, "non-finite sample");
  }
  return x;
}

void validate_cfg(const SamplerConfig& cfg, const NoiseSchedule& schedule) {
  if (cfg.steps < 1 || cfg.steps > schedule.T())
    throw std::invalid_argument("SamplerConfig: steps outside 1..T");
}

}  // namespace

ImageTensor generate(const NoisePredictor& net, const ConceptTable& table,
                     const NoiseSchedule& schedule, const SamplerConfig& cfg,
                     int concept_id, int height, int width, int channels,
                     const RngStream& rng) {
  validate_cfg(cfg, schedule);
  const std::vector<int> ts = ladder_timesteps(schedule, cfg.steps);
  ImageTensor x = rng.child("init").normal_image(height, width, channels);
  return reverse_from(std::move(x), cfg.steps, ts, net, table, schedule, cfg,
                      concept_id, rng);
}

ImageTensor sdedit(const ImageTensor& x_ref, double t0,
                   const NoisePredictor& net, const ConceptTable& table,
                   const NoiseSchedule& schedule, const SamplerConfig& cfg,
                   int concept_id, const RngStream& rng) {
  validate_cfg(cfg, schedule);
  const int k_star = splice_index(cfg.steps, t0);
  if (k_star == 0) return x_ref;

  const std::vector<int> ts = ladder_timesteps(schedule, cfg.steps);
  const ImageTensor eps =
      rng.child("splice").normal_image(x_ref.height, x_ref.width,
                                       x_ref.channels);
  ImageTensor x = forward_sample(x_ref, ts[k_star - 1], eps, schedule);
  return reverse_from(std::move(x), k_star, ts, net, table, schedule, cfg,
                      concept_id, rng);
}

ImageTensor inpaint_blend(const ImageTensor& x_t, const ImageTensor& x_ref,
                          const MaskTensor& preserve, int t,
                          const ImageTensor& eta,
                          const NoiseSchedule& schedule) {
  if (!x_t.same_shape(x_ref) || !x_t.same_shape(eta))
    throw std::invalid_argument("inpaint_blend: shape mismatch");
  if (preserve.height != x_t.height || preserve.width != x_t.width)
    throw std::invalid_argument("inpaint_blend: mask shape mismatch");
  if (!preserve.in_range())
    throw std::invalid_argument("inpaint_blend: mask values outside [0, 1]");
  if (t < 0 || t > schedule.T())
    throw std::invalid_argument("inpaint_blend: t outside 0..T");

  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);

  ImageTensor out(x_t.height, x_t.width, x_t.channels);
  for (int y = 0; y < x_t.height; ++y) {
    for (int x = 0; x < x_t.width; ++x) {
      const double v = preserve.at(y, x);
      for (int c = 0; c < x_t.channels; ++c) {
        const double ref_branch =
            signal * x_ref.at(y, x, c) + noise * eta.at(y, x, c);
        out.at(y, x, c) = (1.0 - v) * x_t.at(y, x, c) + v * ref_branch;
      }
    }
  }
  return out;
}

ImageTensor sdedit_masked(const ImageTensor& x_ref, const MaskTensor& preserve,
                          double t0, const NoisePredictor& net,
                          const ConceptTable& table,
                          const NoiseSchedule& schedule,
                          const SamplerConfig& cfg, int concept_id,
                          const RngStream& rng) {
  validate_cfg(cfg, schedule);
  const int k_star = splice_index(cfg.steps, t0);
  if (k_star == 0) return x_ref;

  const std::vector<int> ts = ladder_timesteps(schedule, cfg.steps);
  const ImageTensor eps =
      rng.child("splice").normal_image(x_ref.height, x_ref.width,
                                       x_ref.channels);
  ImageTensor x = forward_sample(x_ref, ts[k_star - 1], eps, schedule);

  // The blend's eta draws live on their own purpose tag, so an all-zero
  // preserve mask reproduces plain sdedit bit for bit.
  for (int k = k_star; k >= 1; --k) {
    const int t = ts[k - 1];
    const ImageTensor eps_hat =
        guided_noise(net, table, x, t, concept_id, cfg.guidance_scale);
    if (!eps_hat.all_finite())
      throw SamplingDivergence(t, "non-finite noise prediction");
    if (k > 1 || cfg.final_step_noise) {
      const ImageTensor noise =
          rng.child("rev", static_cast<uint64_t>(k))
              .normal_image(x.height, x.width, x.channels);
      x = reverse_step(x, t, eps_hat, schedule, &noise);
    } else {
      x = reverse_step(x, t, eps_hat, schedule, nullptr);
    }
    if (!x.all_finite()) throw SamplingDivergence(t, "non-finite sample");

    const int t_state = (k >= 2) ? ts[k - 2] : 0;
    const ImageTensor eta =
        rng.child("blend", static_cast<uint64_t>(k))
            .normal_image(x.height, x.width, x.channels);
    x = inpaint_blend(x, x_ref, preserve, t_state, eta, schedule);
  }
  return x;
}

}  // namespace dafkit
