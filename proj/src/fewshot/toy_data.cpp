// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/fewshot/toy_data.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dafkit/fewshot/split.hpp"
#include "dafkit/rng.hpp"

namespace dafkit {

ShapeFamily shape_family_from_string(const std::string& name) {
  if (name == "circle") return ShapeFamily::circle;
  if (name == "square") return ShapeFamily::square;
  if (name == "triangle") return ShapeFamily::triangle;
  if (name == "cross") return ShapeFamily::cross;
  if (name == "ring") return ShapeFamily::ring;
  if (name == "diamond") return ShapeFamily::diamond;
  if (name == "bar_h") return ShapeFamily::bar_h;
  if (name == "bar_v") return ShapeFamily::bar_v;
  if (name == "speckle") return ShapeFamily::speckle;
  if (name == "blotch") return ShapeFamily::blotch;
  throw std::invalid_argument("unknown shape family: " + name);
}

std::string to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::circle: return "circle";
    case ShapeFamily::square: return "square";
    case ShapeFamily::triangle: return "triangle";
    case ShapeFamily::cross: return "cross";
    case ShapeFamily::ring: return "ring";
    case ShapeFamily::diamond: return "diamond";
    case ShapeFamily::bar_h: return "bar_h";
    case ShapeFamily::bar_v: return "bar_v";
    case ShapeFamily::speckle: return "speckle";
    case ShapeFamily::blotch: return "blotch";
  }
  return "unknown";
}

namespace {

struct Rgb {
  double r, g, b;
};

// Radius fractions of the resolution keeping mask areas within 5%..60%.
struct RadiusRange {
  double lo, hi;
};

RadiusRange radius_range(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::circle: return {0.145, 0.30};
    case ShapeFamily::square: return {0.145, 0.30};
    case ShapeFamily::triangle: return {0.20, 0.34};
    case ShapeFamily::cross: return {0.16, 0.30};
    case ShapeFamily::ring: return {0.165, 0.30};
    case ShapeFamily::diamond: return {0.15, 0.29};
    case ShapeFamily::bar_h: return {0.17, 0.30};
    case ShapeFamily::bar_v: return {0.17, 0.30};
    case ShapeFamily::speckle: return {0.18, 0.32};
    case ShapeFamily::blotch: return {0.18, 0.32};
  }
  return {0.2, 0.3};
}

bool inside_shape(ShapeFamily f, double dx, double dy, double r) {
  switch (f) {
    case ShapeFamily::circle:
      return dx * dx + dy * dy <= r * r;
    case ShapeFamily::square:
      return std::max(std::abs(dx), std::abs(dy)) <= 0.9 * r;
    case ShapeFamily::triangle: {
      // Upward triangle: apex (0, -r), base corners (+-0.95r, 0.75r).
      if (dy < -r || dy > 0.75 * r) return false;
      const double half_width = 0.95 * r * (dy + r) / (1.75 * r);
      return std::abs(dx) <= half_width;
    }
    case ShapeFamily::cross:
      return (std::abs(dx) <= 0.35 * r && std::abs(dy) <= r) ||
             (std::abs(dy) <= 0.35 * r && std::abs(dx) <= r);
    case ShapeFamily::ring: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.3025 * r * r;
    }
    case ShapeFamily::diamond:
      return std::abs(dx) + std::abs(dy) <= 1.2 * r;
    case ShapeFamily::bar_h:
      return std::abs(dy) <= 0.4 * r && std::abs(dx) <= 1.25 * r;
    case ShapeFamily::bar_v:
      return std::abs(dx) <= 0.4 * r && std::abs(dy) <= 1.25 * r;
    case ShapeFamily::speckle:
    case ShapeFamily::blotch:
      return dx * dx + dy * dy <= r * r;
  }
  return false;
}

double max_extent(ShapeFamily f, double r) {
  switch (f) {
    case ShapeFamily::bar_h:
    case ShapeFamily::bar_v: return 1.25 * r;
    case ShapeFamily::diamond: return 1.2 * r;
    default: return r;
  }
}

Rgb background_anchor(int palette_index, int palette_size) {
  // Evenly spaced muted hues.
  const double phase =
      2.0 * std::numbers::pi * palette_index / std::max(palette_size, 1);
  return {0.15 + 0.35 * std::cos(phase),
          0.15 + 0.35 * std::cos(phase + 2.094),
          0.15 + 0.35 * std::cos(phase + 4.189)};
}

Rgb sample_shape_color(RngStream& rng, const Rgb& bg, double jitter) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rgb c{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0,
          2.0 * rng.uniform() - 1.0};
    c.r *= jitter;
    c.g *= jitter;
    c.b *= jitter;
    const double dist = std::max({std::abs(c.r - bg.r), std::abs(c.g - bg.g),
                                  std::abs(c.b - bg.b)});
    if (dist >= 0.45) return c;
  }
  return {-0.8, 0.7, -0.6};  // guaranteed far from any muted background
}

struct ShapeDraw {
  ShapeFamily family;
  double cx, cy, r;
  Rgb color;
};

ShapeDraw sample_shape(ShapeFamily family, int res, RngStream& rng,
                       const Rgb& bg, double jitter, double scale = 1.0) {
  const RadiusRange rr = radius_range(family);
  ShapeDraw s;
  s.family = family;
  s.r = (rr.lo + (rr.hi - rr.lo) * rng.uniform()) * res * scale;
  const double ext = max_extent(family, s.r);
  const double lo = ext, hi = res - ext;
  s.cx = lo + (hi - lo) * rng.uniform();
  s.cy = lo + (hi - lo) * rng.uniform();
  s.color = sample_shape_color(rng, bg, jitter);
  return s;
}

void render_shape(ImageTensor& img, MaskTensor& mask, const ShapeDraw& s,
                  RngStream& texture_rng) {
  const bool textured =
      s.family == ShapeFamily::speckle || s.family == ShapeFamily::blotch;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x + 0.5 - s.cx;
      const double dy = y + 0.5 - s.cy;
      if (!inside_shape(s.family, dx, dy, s.r)) continue;
      mask.at(y, x) = 1.0;
      Rgb c = s.color;
      if (textured) {
        if (s.family == ShapeFamily::speckle) {
          // High-frequency per-pixel brightness jitter.
          const double n = 0.5 * texture_rng.normal();
          c = {c.r + n, c.g + n, c.b + n};
        } else {
          // Smooth low-frequency ramp across the blob.
          const double n = 0.5 * std::sin(3.0 * (dx + dy) / s.r);
          c = {c.r + n, c.g + n, c.b + n};
        }
      }
      img.at(y, x, 0) = c.r;
      img.at(y, x, 1) = c.g;
      img.at(y, x, 2) = c.b;
    }
  }
}

double mask_fraction(const MaskTensor& m) {
  double count = 0;
  for (double v : m.data) count += (v > 0.5) ? 1.0 : 0.0;
  return count / static_cast<double>(m.size());
}

}  // namespace

std::vector<DatasetRecord> gen_toy_dataset(const ToyDatasetSpec& spec) {
  if (spec.classes < 2)
    throw std::invalid_argument("gen_toy_dataset: need at least 2 classes");
  if (spec.images_per_class < 1 || spec.resolution < 8)
    throw std::invalid_argument("gen_toy_dataset: invalid spec");

  std::vector<ShapeFamily> families = spec.families;
  if (families.empty()) {
    const std::array<ShapeFamily, 10> canonical = {
        ShapeFamily::circle, ShapeFamily::square,  ShapeFamily::triangle,
        ShapeFamily::cross,  ShapeFamily::ring,    ShapeFamily::diamond,
        ShapeFamily::bar_h,  ShapeFamily::bar_v,   ShapeFamily::speckle,
        ShapeFamily::blotch};
    if (spec.classes > static_cast<int>(canonical.size()))
      throw std::invalid_argument("gen_toy_dataset: too many default classes");
    families.assign(canonical.begin(), canonical.begin() + spec.classes);
  }
  if (static_cast<int>(families.size()) != spec.classes)
    throw std::invalid_argument(
        "gen_toy_dataset: families must match class count");

  const int res = spec.resolution;
  std::vector<DatasetRecord> records;
  records.reserve(static_cast<size_t>(spec.classes) * spec.images_per_class);

  for (int cls = 0; cls < spec.classes; ++cls) {
    for (int k = 0; k < spec.images_per_class; ++k) {
      RngStream rng(spec.seed, "toy", static_cast<uint64_t>(cls),
                    static_cast<uint64_t>(k));

      DatasetRecord rec;
      for (int attempt = 0; attempt < 100; ++attempt) {
        RngStream draw = rng.child("attempt", static_cast<uint64_t>(attempt));

        // Background: palette anchor plus jitter, vertical luma gradient.
        const int anchor = spec.background_palette > 0
                               ? static_cast<int>(draw.uniform_index(
                                     spec.background_palette))
                               : 0;
        Rgb bg = background_anchor(anchor, std::max(spec.background_palette, 1));
        const double jr = 0.12 * spec.color_jitter;
        bg.r += jr * (2.0 * draw.uniform() - 1.0);
        bg.g += jr * (2.0 * draw.uniform() - 1.0);
        bg.b += jr * (2.0 * draw.uniform() - 1.0);
        const double grad = 0.15 * (2.0 * draw.uniform() - 1.0);

        ImageTensor img(res, res, 3);
        for (int y = 0; y < res; ++y) {
          const double g = grad * (2.0 * y / (res - 1.0) - 1.0);
          for (int x = 0; x < res; ++x) {
            img.at(y, x, 0) = bg.r + g;
            img.at(y, x, 1) = bg.g + g;
            img.at(y, x, 2) = bg.b + g;
          }
        }

        MaskTensor fg(res, res);
        const ShapeDraw primary = sample_shape(families[cls], res, draw, bg,
                                               spec.color_jitter);
        RngStream texture = draw.child("texture");
        render_shape(img, fg, primary, texture);

        std::vector<std::pair<int, MaskTensor>> masks;
        masks.emplace_back(cls, fg);

        // Optional smaller distractor of another class, drawn first in z
        // order would complicate area control; it is drawn after and may
        // occlude the primary, so re-check areas below.
        if (spec.classes > 1 && draw.uniform() < spec.distractor_prob) {
          const int other = static_cast<int>(
              draw.uniform_index(static_cast<uint64_t>(spec.classes - 1)));
          const int dis_cls = other >= cls ? other + 1 : other;
          MaskTensor dmask(res, res);
          const ShapeDraw d = sample_shape(families[dis_cls], res, draw, bg,
                                           spec.color_jitter, 0.55);
          RngStream dtexture = draw.child("dtexture");
          render_shape(img, dmask, d, dtexture);
          // Pixels taken over by the distractor leave the primary mask.
          for (size_t p = 0; p < fg.data.size(); ++p)
            if (dmask.data[p] == 1.0) masks[0].second.data[p] = 0.0;
          masks.emplace_back(dis_cls, dmask);
        }

        const double primary_frac = mask_fraction(masks[0].second);
        bool distractor_ok = true;
        if (masks.size() == 2) {
          const double dfrac = mask_fraction(masks[1].second);
          distractor_ok = dfrac < primary_frac && dfrac >= 0.01;
        }
        if (primary_frac < 0.05 || primary_frac > 0.60 || !distractor_ok)
          continue;

        // Texture noise over the whole image.
        RngStream noise = draw.child("noise");
        for (double& v : img.data)
          v = std::clamp(v + spec.texture_noise * noise.normal(), -1.0, 1.0);
        quantize_to_pixel_grid(img);

        rec.image = std::move(img);
        rec.masks = spec.emit_masks
                        ? std::move(masks)
                        : std::vector<std::pair<int, MaskTensor>>{};
        rec.label = spec.emit_masks ? label_from_masks(rec.masks) : cls;
        break;
      }
      if (rec.image.size() == 0)
        throw std::runtime_error("gen_toy_dataset: could not satisfy bounds");
      records.push_back(std::move(rec));
    }
  }
  return records;
}

}  // namespace dafkit
