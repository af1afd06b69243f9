// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/fewshot/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace dafkit {

double auc_over_q(const std::vector<std::pair<double, double>>& curve) {
  if (curve.size() < 2)
    throw std::invalid_argument("auc_over_q: need at least 2 points");
  for (size_t i = 1; i < curve.size(); ++i)
    if (!(curve[i].first > curve[i - 1].first))
      throw std::invalid_argument("auc_over_q: q must strictly increase");

  double area = 0.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    const double dx =
        std::log2(curve[i].first) - std::log2(curve[i - 1].first);
    area += 0.5 * (curve[i].second + curve[i - 1].second) * dx;
  }
  const double range =
      std::log2(curve.back().first) - std::log2(curve.front().first);
  return area / range;
}

std::vector<double> normalize_scores(const std::vector<double>& values,
                                     double y_min, double y_max) {
  if (!(y_max > y_min))
    throw std::invalid_argument("normalize_scores: degenerate range");
  std::vector<double> out(values.size());
  const double inv = 1.0 / (y_max - y_min);
  for (size_t i = 0; i < values.size(); ++i)
    out[i] = (values[i] - y_min) * inv;
  return out;
}

ConfidenceInterval confidence_interval_68(const std::vector<double>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("confidence_interval_68: need >= 2 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {mean, mean - sem, mean + sem};
}

}  // namespace dafkit
