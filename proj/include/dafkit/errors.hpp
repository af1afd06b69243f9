// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dafkit {

// Training produced a non-finite loss. Carries the step index.
class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(int step, const std::string& what)
      : std::runtime_error("training diverged at step " +
                           std::to_string(step) + ": " + what),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Sampling produced a non-finite intermediate. Carries the timestep.
class SamplingDivergence : public std::runtime_error {
 public:
  SamplingDivergence(int timestep, const std::string& what)
      : std::runtime_error("sampling diverged at timestep " +
                           std::to_string(timestep) + ": " + what),
        timestep_(timestep) {}
  int timestep() const { return timestep_; }

 private:
  int timestep_;
};

}  // namespace dafkit
