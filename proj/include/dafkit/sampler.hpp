// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dafkit/nn/concept_table.hpp"
#include "dafkit/nn/epsilon_net.hpp"
#include "dafkit/rng.hpp"
#include "dafkit/schedule.hpp"
#include "dafkit/tensor.hpp"

namespace dafkit {

struct SamplerConfig {
  // Reverse-process steps. Must not exceed the schedule's T; when smaller,
  // the sampler walks an evenly strided subset of the timesteps.
  int steps = 1000;
  double guidance_scale = 7.5;
  // Whether Gaussian noise is added on the final step producing x0.
  bool final_step_noise = false;
};

// The raw schedule timesteps visited by an S-step sampler, ascending.
// S == T visits every timestep; otherwise stride floor(T/S).
std::vector<int> ladder_timesteps(const NoiseSchedule& schedule, int steps);

// One reverse transition:
//   mu = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)
// plus sqrt(beta_t) * noise when noise is given (none on the final step).
ImageTensor reverse_step(const ImageTensor& x_t, int t,
                         const ImageTensor& eps_hat,
                         const NoiseSchedule& schedule,
                         const ImageTensor* noise);

// Classifier-free guidance: eps_u + s * (eps_c - eps_u), where eps_c
// conditions on the concept embedding and eps_u on the null embedding.
// s = 0 and s = 1 return the respective branch exactly.
ImageTensor guided_noise(const NoisePredictor& net, const ConceptTable& table,
                         const ImageTensor& x_t, int t, int concept_id,
                         double scale);

// Full reverse chain from x_S ~ N(0, I); deterministic given rng.
ImageTensor generate(const NoisePredictor& net, const ConceptTable& table,
                     const NoiseSchedule& schedule, const SamplerConfig& cfg,
                     int concept_id, int height, int width, int channels,
                     const RngStream& rng);

// Splices x_ref at ladder position floor(S * t0) and denoises from there.
// t0 = 0 returns x_ref unchanged; t0 = 1 is a from-noise generation guided
// only by the reference's statistics.
ImageTensor sdedit(const ImageTensor& x_ref, double t0,
                   const NoisePredictor& net, const ConceptTable& table,
                   const NoiseSchedule& schedule, const SamplerConfig& cfg,
                   int concept_id, const RngStream& rng);

// Pixelwise blend pinning preserve = 1 pixels to the noised reference:
//   (1 - v) * x_t + v * (sqrt(alpha_bar_t) x_ref + sqrt(1 - alpha_bar_t) eta)
// t may be 0, in which case the clean reference is pasted.
ImageTensor inpaint_blend(const ImageTensor& x_t, const ImageTensor& x_ref,
                          const MaskTensor& preserve, int t,
                          const ImageTensor& eta,
                          const NoiseSchedule& schedule);

// sdedit with an inpaint_blend after every reverse step (fresh eta each
// step, drawn from a stream independent of the reverse-noise stream). The
// final blend happens at t = 0, so preserve = 1 pixels equal the reference
// exactly in the output.
ImageTensor sdedit_masked(const ImageTensor& x_ref, const MaskTensor& preserve,
                          double t0, const NoisePredictor& net,
                          const ConceptTable& table,
                          const NoiseSchedule& schedule,
                          const SamplerConfig& cfg, int concept_id,
                          const RngStream& rng);

}  // namespace dafkit
