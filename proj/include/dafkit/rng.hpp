// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "dafkit/tensor.hpp"

namespace dafkit {

// Counter-style random stream addressed by (seed, purpose tag, indices).
// Identical addresses replay the identical sample sequence; distinct
// addresses behave as independent streams. Streams are values: deriving a
// child never touches the parent's state, so work can be farmed out across
// threads without any ordering concerns.
//
// Generator is xoshiro256** seeded via splitmix64 from the derived key.
// Uniform and normal draws are hand-rolled so the sequences do not depend
// on standard-library distribution internals.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view purpose, uint64_t i0 = 0,
            uint64_t i1 = 0, uint64_t i2 = 0);

  // Derives an independent stream from this stream's key.
  RngStream child(std::string_view purpose, uint64_t i0 = 0, uint64_t i1 = 0,
                  uint64_t i2 = 0) const;

  // The derived 64-bit address of this stream (recorded as provenance).
  uint64_t key() const { return key_; }

  uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();

  // Standard normal via Box-Muller (one value per call).
  double normal();

  // Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n);

  // Uniform timestep in 1..T.
  int uniform_timestep(int t_count) {
    return 1 + static_cast<int>(uniform_index(static_cast<uint64_t>(t_count)));
  }

  void fill_normal(std::span<double> out);

  ImageTensor normal_image(int h, int w, int c);

 private:
  explicit RngStream(uint64_t key);

  uint64_t key_ = 0;
  uint64_t s_[4] = {0, 0, 0, 0};
};

}  // namespace dafkit
