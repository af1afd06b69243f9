// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "dafkit/nn/concept_table.hpp"
#include "dafkit/nn/epsilon_net.hpp"
#include "dafkit/schedule.hpp"

namespace dafkit {

// Single binary container: schedule betas, net parameters (names, shapes,
// 32-bit data), concept table and the resolved config text. Versioned
// header with magic "DAFKIT1". Parameters quantize to 32-bit on save, so
// save -> load -> save is byte-stable.
inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'F', 'K',
                                             'I', 'T', '1', '\0'};

struct LoadedCheckpoint {
  NoiseSchedule schedule;
  EpsilonNet net;
  ConceptTable table;
  int resolution = 0;
  std::string config_text;
};

void save_checkpoint(const std::filesystem::path& path,
                     const NoiseSchedule& schedule, const EpsilonNet& net,
                     const ConceptTable& table, int resolution,
                     const std::string& config_text);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// SHA-256 of the 32-bit serialization of the net parameters (used to verify
// that embedding fine-tuning left theta untouched).
std::string theta_sha256(const EpsilonNet& net);

}  // namespace dafkit
