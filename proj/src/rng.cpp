// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dafkit {

namespace {

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Folds one ingredient into a key with full avalanching.
uint64_t fold(uint64_t key, uint64_t v) {
  uint64_t state = key ^ (v * 0xff51afd7ed558ccdull);
  return splitmix64(state);
}

uint64_t derive_key(uint64_t base, std::string_view purpose, uint64_t i0,
                    uint64_t i1, uint64_t i2) {
  uint64_t k = fold(base, fnv1a64(purpose));
  k = fold(k, i0);
  k = fold(k, i1);
  k = fold(k, i2);
  return k;
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(uint64_t key) : key_(key) {
  uint64_t sm = key;
  for (auto& s : s_) s = splitmix64(sm);
}

RngStream::RngStream(uint64_t seed, std::string_view purpose, uint64_t i0,
                     uint64_t i1, uint64_t i2)
    : RngStream(derive_key(seed, purpose, i0, i1, i2)) {}

RngStream RngStream::child(std::string_view purpose, uint64_t i0, uint64_t i1,
                           uint64_t i2) const {
  return RngStream(derive_key(key_, purpose, i0, i1, i2));
}

uint64_t RngStream::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // 1 - uniform() lies in (0, 1], keeping the log argument positive.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t RngStream::uniform_index(uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Multiply-shift map of a 64-bit draw onto [0, n). The residual bias is
  // below n / 2^64 and far under any tolerance used in this project.
  return static_cast<uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

void RngStream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

ImageTensor RngStream::normal_image(int h, int w, int c) {
  ImageTensor img(h, w, c);
  fill_normal(img.data);
  return img;
}

}  // namespace dafkit
