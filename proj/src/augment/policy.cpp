// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/augment/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "dafkit/image_ops.hpp"

namespace dafkit {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::sdedit: return "sdedit";
    case TransformKind::sdedit_masked: return "sdedit_masked";
    case TransformKind::horizontal_flip: return "hflip";
    case TransformKind::vertical_flip: return "vflip";
  }
  return "unknown";
}

std::string to_string(MaskRole role) {
  switch (role) {
    case MaskRole::none: return "none";
    case MaskRole::foreground: return "foreground";
    case MaskRole::background: return "background";
  }
  return "unknown";
}

AugmentationPolicy::AugmentationPolicy(std::vector<PolicyEntry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty())
    throw std::invalid_argument("AugmentationPolicy: no entries");
  double sum = 0.0;
  for (const auto& e : entries_) {
    if (!(e.prob >= 0.0 && e.prob <= 1.0))
      throw std::invalid_argument(
          "AugmentationPolicy: probability outside [0, 1]");
    if ((e.kind == TransformKind::sdedit ||
         e.kind == TransformKind::sdedit_masked) &&
        !(e.t0 >= 0.0 && e.t0 <= 1.0))
      throw std::invalid_argument("AugmentationPolicy: t0 outside [0, 1]");
    sum += e.prob;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(
        "AugmentationPolicy: probabilities must sum to 1");
}

AugmentationPolicy AugmentationPolicy::identity_only() {
  return AugmentationPolicy({{TransformKind::identity, 0.0, MaskRole::none,
                              1.0}});
}

AugmentationPolicy build_dafusion_policy(int k, MaskRole mask_role) {
  if (k < 1)
    throw std::invalid_argument("build_dafusion_policy: k must be >= 1");
  const TransformKind kind = mask_role == MaskRole::none
                                 ? TransformKind::sdedit
                                 : TransformKind::sdedit_masked;
  std::vector<PolicyEntry> entries;
  entries.reserve(k);
  for (int i = 1; i <= k; ++i)
    entries.push_back({kind, static_cast<double>(i) / k, mask_role, 1.0 / k});
  return AugmentationPolicy(std::move(entries));
}

AugmentationPolicy single_sdedit_policy(double t0, MaskRole mask_role) {
  const TransformKind kind = mask_role == MaskRole::none
                                 ? TransformKind::sdedit
                                 : TransformKind::sdedit_masked;
  return AugmentationPolicy({{kind, t0, mask_role, 1.0}});
}

int choose_augmentation(const AugmentationPolicy& policy, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i < policy.size(); ++i) {
    cum += policy.entry(i).prob;
    if (u < cum) return i;
  }
  return policy.size() - 1;  // guard against accumulated rounding
}

ImageTensor flip_augment(const ImageTensor& image, FlipMode mode,
                         double probability, RngStream& rng) {
  if (!(probability >= 0.0 && probability <= 1.0))
    throw std::invalid_argument("flip_augment: probability outside [0, 1]");
  if (rng.uniform() >= probability) return image;
  return mode == FlipMode::horizontal ? mirror_horizontal(image)
                                      : mirror_vertical(image);
}

MaskTensor dilate_mask(const MaskTensor& mask, int radius) {
  if (radius < 0)
    throw std::invalid_argument("dilate_mask: radius must be >= 0");
  if (!mask.is_binary())
    throw std::invalid_argument("dilate_mask: mask must be binary");
  if (radius == 0) return mask;

  MaskTensor out(mask.height, mask.width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      double v = 0.0;
      for (int dy = -radius; dy <= radius && v == 0.0; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= mask.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= mask.width) continue;
          if (mask.at(yy, xx) == 1.0) {
            v = 1.0;
            break;
          }
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

MaskTensor invert_mask(const MaskTensor& mask) {
  if (!mask.in_range())
    throw std::invalid_argument("invert_mask: values outside [0, 1]");
  MaskTensor out(mask.height, mask.width);
  for (size_t i = 0; i < mask.data.size(); ++i)
    out.data[i] = 1.0 - mask.data[i];
  return out;
}

}  // namespace dafkit
