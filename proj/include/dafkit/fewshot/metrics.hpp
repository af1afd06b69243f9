// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

namespace dafkit {

// Area under an accuracy-versus-shots curve: trapezoidal integral over
// log2(q), normalized by the log2(q) range, so a constant curve maps to its
// constant value. Needs >= 2 points with strictly increasing q.
double auc_over_q(const std::vector<std::pair<double, double>>& curve);

// (y - y_min) / (y_max - y_min), elementwise. y_max must exceed y_min.
std::vector<double> normalize_scores(const std::vector<double>& values,
                                     double y_min, double y_max);

struct ConfidenceInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Mean +- one standard error of the mean (the 68% normal-approximation
// interval). Needs >= 2 samples.
ConfidenceInterval confidence_interval_68(const std::vector<double>& samples);

inline bool intervals_overlap(const ConfidenceInterval& a,
                              const ConfidenceInterval& b) {
  return a.low <= b.high && b.low <= a.high;
}

}  // namespace dafkit
