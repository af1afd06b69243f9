// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dafkit/rng.hpp"
#include "dafkit/tensor.hpp"

namespace dafkit {

enum class TransformKind {
  identity,
  sdedit,
  sdedit_masked,
  horizontal_flip,
  vertical_flip,
};

enum class MaskRole { none, foreground, background };

std::string to_string(TransformKind kind);
std::string to_string(MaskRole role);

// One (transform, activation probability) pair.
struct PolicyEntry {
  TransformKind kind = TransformKind::identity;
  double t0 = 0.0;          // edit strength for the sdedit kinds
  MaskRole mask_role = MaskRole::none;
  double prob = 0.0;
};

// Ordered transform list with probabilities summing to one.
class AugmentationPolicy {
 public:
  explicit AugmentationPolicy(std::vector<PolicyEntry> entries);

  const std::vector<PolicyEntry>& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const PolicyEntry& entry(int i) const { return entries_.at(i); }

  static AugmentationPolicy identity_only();

 private:
  std::vector<PolicyEntry> entries_;
};

// The stacked policy: k entries, entry i in 1..k applies strength t0 = i/k,
// each with activation probability 1/k. mask_role selects the masked
// variant for every entry.
AugmentationPolicy build_dafusion_policy(int k,
                                         MaskRole mask_role = MaskRole::none);

// Single-entry policy at a fixed strength (the no-stacking configuration and
// the real-guidance baseline both use t0 = 0.5).
AugmentationPolicy single_sdedit_policy(double t0,
                                        MaskRole mask_role = MaskRole::none);

// Categorical draw over the entries, deterministic given rng.
int choose_augmentation(const AugmentationPolicy& policy, RngStream& rng);

// Classic flip augmentation: mirrors with the given probability.
enum class FlipMode { horizontal, vertical };
ImageTensor flip_augment(const ImageTensor& image, FlipMode mode,
                         double probability, RngStream& rng);

// Morphological dilation of a binary mask with a square structuring element
// of Chebyshev radius r.
MaskTensor dilate_mask(const MaskTensor& mask, int radius);

// 1 - v, elementwise.
MaskTensor invert_mask(const MaskTensor& mask);

}  // namespace dafkit
