// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dafkit/tensor.hpp"

namespace dafkit {

// Variance schedule over T diffusion timesteps. Timesteps are 1-based
// (t in 1..T); alpha_bar(0) = 1 so that t = 0 denotes the clean image.
//
//   alpha_t     = 1 - beta_t
//   alpha_bar_t = prod_{s=1..t} alpha_s   (strictly decreasing in t)
class NoiseSchedule {
 public:
  // Betas linearly interpolated from beta_start to beta_end inclusive.
  static NoiseSchedule linear(int t_count, double beta_start, double beta_end);

  // Builds directly from a beta sequence (used when reloading checkpoints).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int T() const { return static_cast<int>(betas_.size()); }

  double beta(int t) const;       // t in 1..T
  double alpha(int t) const;      // t in 1..T
  double alpha_bar(int t) const;  // t in 0..T

  const std::vector<double>& betas() const { return betas_; }

 private:
  NoiseSchedule() = default;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;  // size T + 1, alpha_bars_[0] = 1
};

// Closed-form draw from the forward (noising) process at timestep t:
//   sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps
ImageTensor forward_sample(const ImageTensor& x0, int t, const ImageTensor& eps,
                           const NoiseSchedule& schedule);

// Insertion index floor(S * t0) for splicing a reference image into an
// S-step reverse process; index 0 means "no noising".
int splice_index(int steps, double t0);

}  // namespace dafkit
