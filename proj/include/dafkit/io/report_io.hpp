// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "dafkit/fewshot/experiment.hpp"

namespace dafkit {

// metrics.csv: one row per cell, columns
//   dataset,method,q,trial,accuracy,steps_to_best
// Accuracy uses shortest round-trip formatting, so reading the file back
// reproduces the doubles exactly. Failed cells carry accuracy = nan.
void write_metrics_csv(const std::filesystem::path& path,
                       const ExperimentReport& report);
ExperimentReport read_metrics_csv(const std::filesystem::path& path);

// summary.csv: method,auc,auc_ci_low,auc_ci_high,normalized_score
void write_summary_csv(const std::filesystem::path& path,
                       const ExperimentReport& report);

// Mean accuracy-vs-shots curves with shaded 68% CI bands. Best effort;
// never throws on plotting quirks.
void write_curves_svg(const std::filesystem::path& path,
                      const ExperimentReport& report);

}  // namespace dafkit
