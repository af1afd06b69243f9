// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>

#include "dafkit/augment/mixer.hpp"
#include "dafkit/augment/policy.hpp"
#include "dafkit/augment/store.hpp"
#include "dafkit/image_ops.hpp"
#include "test_util.hpp"

using namespace dafkit;
using testutil::random_image;

TEST_CASE("dafusion policy instantiation") {
  const auto p4 = build_dafusion_policy(4);
  REQUIRE(p4.size() == 4);
  const double want_t0[] = {0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(p4.entry(i).kind == TransformKind::sdedit);
    CHECK(p4.entry(i).t0 == doctest::Approx(want_t0[i]).epsilon(1e-15));
    CHECK(p4.entry(i).prob == doctest::Approx(0.25).epsilon(1e-15));
  }

  const auto p1 = build_dafusion_policy(1);
  REQUIRE(p1.size() == 1);
  CHECK(p1.entry(0).t0 == 1.0);
  CHECK(p1.entry(0).prob == 1.0);

  const auto p2 = build_dafusion_policy(2);
  REQUIRE(p2.size() == 2);
  CHECK(p2.entry(0).t0 == 0.5);
  CHECK(p2.entry(1).t0 == 1.0);
  CHECK(p2.entry(0).prob == 0.5);

  CHECK_THROWS_AS(build_dafusion_policy(0), std::invalid_argument);

  const auto masked = build_dafusion_policy(2, MaskRole::foreground);
  CHECK(masked.entry(0).kind == TransformKind::sdedit_masked);
  CHECK(masked.entry(0).mask_role == MaskRole::foreground);
}

TEST_CASE("policy rejects probabilities that do not sum to one") {
  std::vector<PolicyEntry> bad = {
      {TransformKind::identity, 0.0, MaskRole::none, 0.5},
      {TransformKind::identity, 0.0, MaskRole::none, 0.4}};
  CHECK_THROWS_AS(AugmentationPolicy(std::move(bad)), std::invalid_argument);

  std::vector<PolicyEntry> good = {
      {TransformKind::identity, 0.0, MaskRole::none, 0.5},
      {TransformKind::horizontal_flip, 0.0, MaskRole::none, 0.5}};
  CHECK_NOTHROW(AugmentationPolicy(std::move(good)));
}

TEST_CASE("choose_augmentation degenerate and deterministic cases") {
  std::vector<PolicyEntry> entries = {
      {TransformKind::identity, 0.0, MaskRole::none, 1.0},
      {TransformKind::horizontal_flip, 0.0, MaskRole::none, 0.0},
      {TransformKind::vertical_flip, 0.0, MaskRole::none, 0.0}};
  const AugmentationPolicy policy(std::move(entries));
  RngStream rng(1, "choose");
  for (int i = 0; i < 100; ++i) CHECK(choose_augmentation(policy, rng) == 0);

  const auto p4 = build_dafusion_policy(4);
  RngStream a(2, "det"), b(2, "det");
  for (int i = 0; i < 50; ++i)
    CHECK(choose_augmentation(p4, a) == choose_augmentation(p4, b));
}

TEST_CASE("choose_augmentation frequencies approach the probabilities") {
  const auto p4 = build_dafusion_policy(4);
  RngStream rng(3, "freq");
  const int n = 100000;
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[choose_augmentation(p4, rng)];
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(counts[k] / static_cast<double>(n) - 0.25) <= 0.01);
}

TEST_CASE("flip_augment endpoints and involution") {
  const ImageTensor img = random_image(4, 6, 3, RngStream(4, "img"));
  RngStream rng(5, "flip");
  CHECK(flip_augment(img, FlipMode::horizontal, 0.0, rng) == img);

  const ImageTensor flipped =
      flip_augment(img, FlipMode::horizontal, 1.0, rng);
  CHECK(!(flipped == img));
  RngStream rng2(6, "flip2");
  CHECK(flip_augment(flipped, FlipMode::horizontal, 1.0, rng2) == img);
}

TEST_CASE("asymmetric 2x1 image flips to reversed order") {
  ImageTensor img(1, 2, 1);
  img.data = {0.25, -0.75};
  const ImageTensor h = mirror_horizontal(img);
  CHECK(h.data[0] == -0.75);
  CHECK(h.data[1] == 0.25);

  ImageTensor tall(2, 1, 1);
  tall.data = {0.25, -0.75};
  const ImageTensor v = mirror_vertical(tall);
  CHECK(v.data[0] == -0.75);
  CHECK(v.data[1] == 0.25);
}

TEST_CASE("rotations compose back to the identity") {
  const ImageTensor img = random_image(5, 7, 3, RngStream(7, "img"));
  CHECK(rotate180(rotate180(img)) == img);
  CHECK(rotate270(rotate90(img)) == img);
  CHECK(rotate90(rotate90(img)) == rotate180(img));
}

TEST_CASE("dilate_mask examples") {
  MaskTensor m(5, 5);
  m.at(2, 2) = 1.0;

  CHECK(dilate_mask(m, 0) == m);
  CHECK(dilate_mask(MaskTensor::zeros(5, 5), 3) == MaskTensor::zeros(5, 5));

  const MaskTensor d = dilate_mask(m, 1);
  // Brute-force Chebyshev-distance oracle.
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool want = std::max(std::abs(y - 2), std::abs(x - 2)) <= 1;
      CHECK(d.at(y, x) == (want ? 1.0 : 0.0));
    }

  MaskTensor frac(5, 5);
  frac.at(0, 0) = 0.5;
  CHECK_THROWS_AS(dilate_mask(frac, 1), std::invalid_argument);
}

TEST_CASE("dilate_mask against the oracle on random masks") {
  RngStream rng(8, "mask");
  for (int rep = 0; rep < 5; ++rep) {
    MaskTensor m(9, 9);
    for (double& v : m.data) v = rng.uniform() < 0.15 ? 1.0 : 0.0;
    for (int r = 0; r <= 3; ++r) {
      const MaskTensor d = dilate_mask(m, r);
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) {
          bool want = false;
          for (int yy = 0; yy < 9 && !want; ++yy)
            for (int xx = 0; xx < 9; ++xx)
              if (m.at(yy, xx) == 1.0 &&
                  std::max(std::abs(yy - y), std::abs(xx - x)) <= r) {
                want = true;
                break;
              }
          CHECK(d.at(y, x) == (want ? 1.0 : 0.0));
        }
    }
  }
}

TEST_CASE("invert_mask identities") {
  MaskTensor m(3, 3);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = (i % 2) ? 1.0 : 0.0;
  const MaskTensor inv = invert_mask(m);
  CHECK(invert_mask(inv) == m);  // exact for binary masks
  CHECK(invert_mask(MaskTensor::ones(3, 3)) == MaskTensor::zeros(3, 3));

  MaskTensor frac(1, 1);
  frac.data = {0.3};
  CHECK(invert_mask(frac).data[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(invert_mask(invert_mask(frac)).data[0] ==
        doctest::Approx(0.3).epsilon(1e-15));
}

namespace {

std::vector<StoreSource> make_sources(int n, int res = 8) {
  std::vector<StoreSource> sources;
  for (int i = 0; i < n; ++i) {
    StoreSource src;
    src.image = random_image(res, res, 3, RngStream(100 + i, "src"));
    quantize_to_pixel_grid(src.image);
    src.label = i % 2;
    src.concept_id = 0;
    sources.push_back(std::move(src));
  }
  return sources;
}

GenerationContext stub_context(const NoisePredictor& net,
                               const ConceptTable& table,
                               const NoiseSchedule& schedule) {
  GenerationContext ctx;
  ctx.net = &net;
  ctx.table = &table;
  ctx.schedule = &schedule;
  ctx.sampler.steps = schedule.T();
  ctx.sampler.guidance_scale = 1.0;
  ctx.mask_dilation = 1;
  return ctx;
}

}  // namespace

TEST_CASE("build_store cardinality and identity policy") {
  const auto schedule = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table(4, RngStream(9, "t"));
  const auto stub = testutil::constant_predictor(ImageTensor::zeros(8, 8, 3));
  const auto ctx = stub_context(stub, table, schedule);
  const auto sources = make_sources(2);

  const SyntheticStore store = build_store(
      sources, AugmentationPolicy::identity_only(), 3, ctx, 42);
  CHECK(store.n() == 2);
  CHECK(store.m() == 3);
  CHECK(store.complete());

  std::map<std::pair<int, int>, int> seen;
  for (const auto& r : store.records()) {
    ++seen[{r.i, r.j}];
    CHECK(r.image == sources[r.i].image);  // identity stores the source
    CHECK(r.label == sources[r.i].label);
    CHECK(r.status == "ok");
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("build_store is deterministic and worker-count independent") {
  const auto schedule = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table(4, RngStream(10, "t"));
  testutil::StubPredictor stub;
  stub.fn = [](const ImageTensor& x, int, std::span<const double>) {
    ImageTensor out = x;
    for (double& v : out.data) v *= 0.3;
    return out;
  };
  const auto ctx = stub_context(stub, table, schedule);
  const auto sources = make_sources(3);
  const auto policy = build_dafusion_policy(4);

  const SyntheticStore a = build_store(sources, policy, 4, ctx, 7, 1);
  const SyntheticStore b = build_store(sources, policy, 4, ctx, 7, 3);
  REQUIRE(a.records().size() == b.records().size());
  for (size_t i = 0; i < a.records().size(); ++i) {
    CHECK(a.records()[i].image == b.records()[i].image);
    CHECK(a.records()[i].seed == b.records()[i].seed);
    CHECK(a.records()[i].policy_entry == b.records()[i].policy_entry);
  }

  const SyntheticStore c = build_store(sources, policy, 4, ctx, 8, 1);
  bool any_diff = false;
  for (size_t i = 0; i < a.records().size(); ++i)
    any_diff |= !(a.records()[i].image == c.records()[i].image);
  CHECK(any_diff);
}

TEST_CASE("build_store per-entry usage counts match the policy") {
  const auto schedule = NoiseSchedule::linear(4, 0.02, 0.3);
  const ConceptTable table(4, RngStream(11, "t"));
  const auto stub = testutil::constant_predictor(ImageTensor::zeros(4, 4, 3));
  auto ctx = stub_context(stub, table, schedule);
  // Flip/identity-only policy keeps this cheap at 4000 records.
  std::vector<PolicyEntry> entries = {
      {TransformKind::identity, 0.0, MaskRole::none, 0.25},
      {TransformKind::horizontal_flip, 0.0, MaskRole::none, 0.25},
      {TransformKind::vertical_flip, 0.0, MaskRole::none, 0.25},
      {TransformKind::identity, 0.0, MaskRole::none, 0.25}};
  const AugmentationPolicy policy{std::move(entries)};

  auto sources = make_sources(40, 4);
  const SyntheticStore store = build_store(sources, policy, 100, ctx, 13);
  int counts[4] = {0, 0, 0, 0};
  for (const auto& r : store.records()) ++counts[r.policy_entry];
  for (int k = 0; k < 4; ++k) {
    CHECK(counts[k] >= 950);
    CHECK(counts[k] <= 1050);
  }
}

TEST_CASE("masked policy entries need masks") {
  const auto schedule = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table(4, RngStream(12, "t"));
  const auto stub = testutil::constant_predictor(ImageTensor::zeros(8, 8, 3));
  const auto ctx = stub_context(stub, table, schedule);
  auto sources = make_sources(1);
  CHECK_THROWS_AS(build_store(sources, single_sdedit_policy(
                                  0.5, MaskRole::foreground),
                              1, ctx, 5),
                  std::invalid_argument);

  // With a mask, foreground mode regenerates only the object region.
  sources[0].mask = MaskTensor::zeros(8, 8);
  for (int y = 3; y <= 4; ++y)
    for (int x = 3; x <= 4; ++x) sources[0].mask->at(y, x) = 1.0;
  const SyntheticStore store = build_store(
      sources, single_sdedit_policy(1.0, MaskRole::foreground), 1, ctx, 5);
  CHECK(store.complete());
  const ImageTensor& out = store.at(0, 0).image;
  // Pixels outside the dilated object mask are preserved exactly.
  const MaskTensor dilated = dilate_mask(*sources[0].mask, ctx.mask_dilation);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (dilated.at(y, x) == 0.0)
        for (int ch = 0; ch < 3; ++ch)
          CHECK(out.at(y, x, ch) == sources[0].image.at(y, x, ch));
}

TEST_CASE("balanced_batch boundary alphas") {
  const auto sources = make_sources(4);
  std::vector<DatasetRecord> real;
  for (const auto& s : sources) real.push_back({s.image, s.label, {}});
  const SyntheticStore store = identity_store(sources, 3);

  RngStream rng(20, "mix");
  MixerConfig mix;
  mix.batch_size = 64;

  mix.alpha = 0.0;
  for (const auto& slot : balanced_batch(real, store, mix, rng))
    CHECK(!slot.synthetic);

  mix.alpha = 1.0;
  for (const auto& slot : balanced_batch(real, store, mix, rng))
    CHECK(slot.synthetic);
}

TEST_CASE("balanced_batch synthetic fraction approaches alpha") {
  const auto sources = make_sources(5, 4);
  std::vector<DatasetRecord> real;
  for (const auto& s : sources) real.push_back({s.image, s.label, {}});
  const SyntheticStore store = identity_store(sources, 5);

  for (const double alpha : {0.3, 0.5, 0.7}) {
    RngStream rng(21, "mix", static_cast<uint64_t>(alpha * 10));
    MixerConfig mix;
    mix.alpha = alpha;
    mix.batch_size = 100000;
    const auto batch = balanced_batch(real, store, mix, rng);
    double synth = 0.0;
    for (const auto& slot : batch) synth += slot.synthetic ? 1.0 : 0.0;
    CHECK(std::abs(synth / batch.size() - alpha) <= 0.01);
  }
}

TEST_CASE("balanced_batch draws (i, j) uniformly among synthetic slots") {
  const int n = 5, m = 5;
  const auto sources = make_sources(n, 4);
  std::vector<DatasetRecord> real;
  for (const auto& s : sources) real.push_back({s.image, s.label, {}});
  const SyntheticStore store = identity_store(sources, m);

  RngStream rng(22, "chi");
  MixerConfig mix;
  mix.alpha = 1.0;
  mix.batch_size = 100000;
  const auto batch = balanced_batch(real, store, mix, rng);

  std::map<std::pair<int, int>, int> counts;
  for (const auto& slot : batch) ++counts[{slot.i, slot.j}];
  // Chi-squared against uniform over 25 cells; 0.01 significance for 24
  // degrees of freedom is ~43.
  const double expect = mix.batch_size / 25.0;
  double chi2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double c = counts[{i, j}];
      chi2 += (c - expect) * (c - expect) / expect;
    }
  CHECK(chi2 < 43.0);
}

TEST_CASE("balanced_batch labels follow the source image") {
  const auto sources = make_sources(6);
  std::vector<DatasetRecord> real;
  for (const auto& s : sources) real.push_back({s.image, s.label, {}});
  const SyntheticStore store = identity_store(sources, 2);

  RngStream rng(23, "labels");
  MixerConfig mix;
  mix.alpha = 0.5;
  mix.batch_size = 512;
  for (const auto& slot : balanced_batch(real, store, mix, rng))
    CHECK(slot.label == real[slot.i].label);
}

TEST_CASE("balanced_batch validates inputs") {
  const auto sources = make_sources(2);
  std::vector<DatasetRecord> real;
  for (const auto& s : sources) real.push_back({s.image, s.label, {}});
  const SyntheticStore store = identity_store(sources, 2);
  RngStream rng(24, "bad");

  MixerConfig mix;
  CHECK_THROWS_AS(balanced_batch({}, store, mix, rng), std::invalid_argument);

  mix.alpha = 1.5;
  CHECK_THROWS_AS(balanced_batch(real, store, mix, rng),
                  std::invalid_argument);

  mix.alpha = 0.5;
  SyntheticStore incomplete(2, 2);
  CHECK_THROWS_AS(balanced_batch(real, incomplete, mix, rng),
                  std::invalid_argument);
}
