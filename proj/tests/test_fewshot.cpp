// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "dafkit/fewshot/experiment.hpp"
#include "dafkit/fewshot/metrics.hpp"
#include "dafkit/fewshot/probe.hpp"
#include "dafkit/fewshot/split.hpp"
#include "dafkit/fewshot/toy_data.hpp"
#include "test_util.hpp"

using namespace dafkit;

TEST_CASE("toy dataset cardinality and determinism") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 100;
  spec.resolution = 16;
  spec.seed = 5;

  const auto a = gen_toy_dataset(spec);
  REQUIRE(a.size() == 200);
  int per_class[2] = {0, 0};
  for (const auto& rec : a) {
    REQUIRE(rec.label >= 0);
    REQUIRE(rec.label < 2);
    ++per_class[rec.label];
  }
  CHECK(per_class[0] == 100);
  CHECK(per_class[1] == 100);

  const auto b = gen_toy_dataset(spec);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].label == b[i].label);
  }

  spec.seed = 6;
  const auto c = gen_toy_dataset(spec);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= !(a[i].image == c[i].image);
  CHECK(any_diff);
}

TEST_CASE("toy dataset masks cover 5 to 60 percent of pixels") {
  ToyDatasetSpec spec;
  spec.classes = 4;
  spec.images_per_class = 50;
  spec.resolution = 32;
  spec.seed = 7;
  const auto records = gen_toy_dataset(spec);
  for (const auto& rec : records) {
    REQUIRE(!rec.masks.empty());
    const MaskTensor* own = rec.own_mask();
    REQUIRE(own != nullptr);
    double frac = 0.0;
    for (double v : own->data) frac += v > 0.5 ? 1.0 : 0.0;
    frac /= own->size();
    CHECK(frac >= 0.05);
    CHECK(frac <= 0.60);
  }
}

TEST_CASE("toy dataset pixel values sit on the 8-bit grid in [-1, 1]") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 5;
  spec.seed = 8;
  for (const auto& rec : gen_toy_dataset(spec))
    for (double v : rec.image.data) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      CHECK(v == pixel_to_real(real_to_pixel(v)));
    }
}

TEST_CASE("every texture family renders") {
  ToyDatasetSpec spec;
  spec.classes = 10;
  spec.images_per_class = 3;
  spec.families = {ShapeFamily::circle,  ShapeFamily::square,
                   ShapeFamily::triangle, ShapeFamily::cross,
                   ShapeFamily::ring,     ShapeFamily::diamond,
                   ShapeFamily::bar_h,    ShapeFamily::bar_v,
                   ShapeFamily::speckle,  ShapeFamily::blotch};
  spec.seed = 9;
  CHECK(gen_toy_dataset(spec).size() == 30);
}

TEST_CASE("label_from_masks picks the largest area with low-id tie break") {
  MaskTensor small(4, 4), big(4, 4), same(4, 4);
  small.at(0, 0) = 1.0;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) big.at(y, x) = 1.0;
  same.at(1, 1) = 1.0;

  CHECK(label_from_masks({{3, small}}) == 3);
  CHECK(label_from_masks({{0, small}, {1, big}}) == 1);
  CHECK(label_from_masks({{2, small}, {5, same}}) == 2);  // equal areas
  CHECK(label_from_masks({{5, small}, {2, same}}) == 2);
  CHECK_THROWS_AS(label_from_masks({}), std::invalid_argument);
}

TEST_CASE("make_split holds out a fixed validation pool") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 20;
  spec.seed = 10;
  const auto data = gen_toy_dataset(spec);

  const FewShotSplit a = make_split(data, 3, 111);
  const FewShotSplit b = make_split(data, 5, 222);
  CHECK(a.validation == b.validation);  // q- and seed-independent
  CHECK(a.validation.size() == 8);      // 20% of 20 per class

  for (const auto& [cls, indices] : a.train) {
    CHECK(static_cast<int>(indices.size()) == 3);
    for (int idx : indices) {
      CHECK(data[idx].label == cls);
      for (int v : a.validation) CHECK(idx != v);
    }
  }
}

TEST_CASE("make_split uses all candidates when q equals the pool") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 10;
  spec.seed = 11;
  const auto data = gen_toy_dataset(spec);
  const FewShotSplit s = make_split(data, 8, 1);  // pool = 10 - 2 val
  for (const auto& [cls, indices] : s.train)
    CHECK(indices.size() == 8);
  CHECK_THROWS_AS(make_split(data, 9, 1), std::invalid_argument);
}

TEST_CASE("make_split q=1 yields one image per class") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 10;
  spec.seed = 12;
  const auto data = gen_toy_dataset(spec);
  const FewShotSplit s = make_split(data, 1, 3);
  int total = 0;
  for (const auto& [cls, indices] : s.train) total += indices.size();
  CHECK(total == 2);
}

TEST_CASE("distinct seeds give distinct selections almost surely") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 40;
  spec.seed = 13;
  const auto data = gen_toy_dataset(spec);
  std::set<std::vector<int>> seen;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const FewShotSplit s = make_split(data, 4, seed);
    std::vector<int> key;
    for (const auto& [cls, indices] : s.train)
      key.insert(key.end(), indices.begin(), indices.end());
    seen.insert(key);
  }
  CHECK(seen.size() >= 99);
}

TEST_CASE("auc_over_q identities and oracle") {
  CHECK(auc_over_q({{1, 0.7}, {2, 0.7}, {4, 0.7}}) ==
        doctest::Approx(0.7).epsilon(1e-15));
  CHECK(auc_over_q({{1, 0.0}, {2, 1.0}}) == doctest::Approx(0.5).epsilon(1e-15));

  // Independent numerical integration oracle on a random 5-point curve.
  RngStream rng(14, "curve");
  std::vector<std::pair<double, double>> curve;
  double q = 1;
  for (int i = 0; i < 5; ++i) {
    curve.emplace_back(q, rng.uniform());
    q *= 2;
  }
  double oracle = 0.0;
  for (int i = 1; i < 5; ++i) {
    const double x0 = std::log2(curve[i - 1].first);
    const double x1 = std::log2(curve[i].first);
    // Midpoint rule on a linear interpolant equals the trapezoid.
    const double mid = 0.5 * (curve[i - 1].second + curve[i].second);
    oracle += mid * (x1 - x0);
  }
  oracle /= std::log2(curve.back().first) - std::log2(curve.front().first);
  CHECK(std::abs(auc_over_q(curve) - oracle) <= 1e-12);

  CHECK_THROWS_AS(auc_over_q({{1, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(auc_over_q({{2, 0.5}, {2, 0.6}}), std::invalid_argument);
}

TEST_CASE("normalize_scores endpoints and order preservation") {
  const auto out = normalize_scores({0.2, 0.5, 0.8}, 0.2, 0.8);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[2] == 1.0);
  for (size_t i = 1; i < out.size(); ++i) CHECK(out[i] > out[i - 1]);
  CHECK_THROWS_AS(normalize_scores({0.5}, 0.7, 0.7), std::invalid_argument);
}

TEST_CASE("confidence_interval_68 matches the SEM by hand") {
  const auto two = confidence_interval_68({0.0, 1.0});
  CHECK(two.mean == doctest::Approx(0.5).epsilon(1e-15));
  // sample sd = sqrt(0.5), sem = sqrt(0.5)/sqrt(2) = 0.5
  CHECK(two.high - two.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.mean - two.low == doctest::Approx(0.5).epsilon(1e-12));

  const auto equal = confidence_interval_68({0.4, 0.4, 0.4});
  CHECK(equal.mean == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(equal.high - equal.low <= 1e-15);  // zero-width interval

  // Independent SEM computation on 8 samples.
  RngStream rng(15, "ci");
  std::vector<double> samples;
  for (int i = 0; i < 8; ++i) samples.push_back(rng.uniform());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= 8;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sem = std::sqrt(ss / 7.0) / std::sqrt(8.0);
  const auto ci = confidence_interval_68(samples);
  CHECK(std::abs(ci.mean - mean) <= 1e-12);
  CHECK(std::abs((ci.high - ci.low) / 2 - sem) <= 1e-12);

  CHECK_THROWS_AS(confidence_interval_68({0.5}), std::invalid_argument);
}

TEST_CASE("train_probe reaches high accuracy on separable features") {
  // A fixture extractor whose features are linearly separable by class:
  // two classes of constant images at distinct levels.
  FeatureExtractor::Config cfg;
  cfg.c1 = 4;
  cfg.c2 = 4;
  cfg.c3 = 8;
  FeatureExtractor extractor(cfg, RngStream(30, "ext"));

  auto make_image = [](int cls, int k) {
    ImageTensor img(8, 8, 3);
    for (size_t i = 0; i < img.data.size(); ++i)
      img.data[i] = (cls == 0 ? 0.6 : -0.6) + 0.01 * ((k + i) % 7);
    return img;
  };

  std::vector<std::pair<ImageTensor, int>> val;
  for (int k = 0; k < 10; ++k) {
    val.emplace_back(make_image(0, 100 + k), 0);
    val.emplace_back(make_image(1, 100 + k), 1);
  }

  LinearProbe probe(extractor, 2, RngStream(31, "head"));
  ProbeConfig pc;
  pc.lr = 0.01;
  pc.steps = 300;
  pc.eval_interval = 50;

  BatchSource batches = [&](int step) {
    std::vector<std::pair<ImageTensor, int>> batch;
    for (int b = 0; b < 8; ++b) {
      const int cls = (step + b) % 2;
      batch.emplace_back(make_image(cls, step * 8 + b), cls);
    }
    return batch;
  };

  const FeatureExtractor before = extractor;
  const ProbeResult res = train_probe(probe, batches, val, pc);
  CHECK(res.best_accuracy >= 0.99);
  CHECK(extractor.same_parameters(before));  // frozen
}

TEST_CASE("train_probe with zero steps reports the initial accuracy") {
  FeatureExtractor::Config cfg;
  cfg.c1 = 4;
  cfg.c2 = 4;
  cfg.c3 = 8;
  FeatureExtractor extractor(cfg, RngStream(32, "ext"));
  LinearProbe probe(extractor, 2, RngStream(33, "head"));
  const Linear head_before = probe.head;

  std::vector<std::pair<ImageTensor, int>> val = {
      {ImageTensor::zeros(8, 8, 3), 0}, {ImageTensor::zeros(8, 8, 3), 1}};
  ProbeConfig pc;
  pc.steps = 0;
  const ProbeResult res = train_probe(
      probe, [](int) { return std::vector<std::pair<ImageTensor, int>>{}; },
      val, pc);
  CHECK(res.best_accuracy == res.initial_accuracy);
  CHECK(res.steps_to_best == 0);
  CHECK(probe.head.weight == head_before.weight);
  CHECK(probe.head.bias == head_before.bias);
}

TEST_CASE("feature extractor training learns disjoint toy classes") {
  ToyDatasetSpec spec;
  spec.classes = 2;
  spec.images_per_class = 40;
  spec.resolution = 16;
  spec.families = {ShapeFamily::ring, ShapeFamily::bar_h};
  spec.seed = 16;
  const auto data = gen_toy_dataset(spec);

  FeatureExtractor::Config net_cfg;
  net_cfg.c1 = 8;
  net_cfg.c2 = 16;
  net_cfg.c3 = 16;
  ExtractorTrainConfig cfg;
  cfg.lr = 2e-3;
  cfg.batch_size = 8;
  cfg.steps = 700;
  cfg.seed = 17;
  const ExtractorTrainResult res =
      train_feature_extractor(data, 2, net_cfg, cfg);
  CHECK(res.final_train_accuracy >= 0.9);
}

TEST_CASE("method spec parsing round trips") {
  for (const std::string name :
       {"baseline", "real-guidance", "dafusion-k4", "dafusion-k1",
        "dafusion-masked-foreground", "dafusion-masked-background",
        "degenerate-identity"}) {
    CHECK(MethodSpec::parse(name).name() == name);
  }
  CHECK(MethodSpec::parse("dafusion-k7").k == 7);
  CHECK_THROWS_AS(MethodSpec::parse("nonsense"), std::invalid_argument);
}
