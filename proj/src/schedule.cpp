// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dafkit {

NoiseSchedule NoiseSchedule::linear(int t_count, double beta_start,
                                    double beta_end) {
  if (t_count < 1)
    throw std::invalid_argument("NoiseSchedule: T must be at least 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument(
        "NoiseSchedule: need 0 < beta_start <= beta_end < 1");

  std::vector<double> betas(t_count);
  if (t_count == 1) {
    betas[0] = beta_start;
  } else {
    const double step = (beta_end - beta_start) / (t_count - 1);
    for (int i = 0; i < t_count; ++i) betas[i] = beta_start + step * i;
    betas.back() = beta_end;  // endpoint exact
  }
  return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty())
    throw std::invalid_argument("NoiseSchedule: empty beta sequence");

  NoiseSchedule s;
  s.betas_ = std::move(betas);
  const int t_count = static_cast<int>(s.betas_.size());
  s.alphas_.resize(t_count);
  s.alpha_bars_.resize(t_count + 1);
  s.alpha_bars_[0] = 1.0;
  for (int i = 0; i < t_count; ++i) {
    const double b = s.betas_[i];
    if (!(b > 0.0 && b < 1.0))
      throw std::invalid_argument("NoiseSchedule: beta_" +
                                  std::to_string(i + 1) + " outside (0, 1)");
    s.alphas_[i] = 1.0 - b;
    s.alpha_bars_[i + 1] = s.alpha_bars_[i] * s.alphas_[i];
    if (!(s.alpha_bars_[i + 1] < s.alpha_bars_[i]))
      throw std::invalid_argument("NoiseSchedule: alpha_bar not decreasing");
  }
  if (!(s.alpha_bars_[t_count] > 0.0))
    throw std::invalid_argument("NoiseSchedule: alpha_bar_T underflowed");
  return s;
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > T())
    throw std::invalid_argument("beta: t outside 1..T");
  return betas_[t - 1];
}

double NoiseSchedule::alpha(int t) const {
  if (t < 1 || t > T())
    throw std::invalid_argument("alpha: t outside 1..T");
  return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > T())
    throw std::invalid_argument("alpha_bar: t outside 0..T");
  return alpha_bars_[t];
}

ImageTensor forward_sample(const ImageTensor& x0, int t, const ImageTensor& eps,
                           const NoiseSchedule& schedule) {
  if (!x0.same_shape(eps))
    throw std::invalid_argument("forward_sample: eps shape mismatch");
  if (t < 1 || t > schedule.T())
    throw std::invalid_argument("forward_sample: t outside 1..T");

  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);

  ImageTensor out(x0.height, x0.width, x0.channels);
  for (size_t i = 0; i < x0.data.size(); ++i)
    out.data[i] = signal * x0.data[i] + noise * eps.data[i];
  return out;
}

int splice_index(int steps, double t0) {
  if (steps < 1) throw std::invalid_argument("splice_index: S must be >= 1");
  if (!(t0 >= 0.0 && t0 <= 1.0))
    throw std::invalid_argument("splice_index: t0 outside [0, 1]");
  return static_cast<int>(std::floor(steps * t0));
}

}  // namespace dafkit
