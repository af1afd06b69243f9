// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "dafkit/sampler.hpp"
#include "test_util.hpp"

using namespace dafkit;
using testutil::StubPredictor;
using testutil::random_image;

namespace {

ConceptTable two_concept_table() {
  ConceptTable table(4, RngStream(1, "table"));
  table.add("class:0", {9.0, 9.0, 9.0, 9.0}, true);  // distinct from null
  return table;
}

}  // namespace

TEST_CASE("ladder timesteps") {
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  const auto full = ladder_timesteps(s, 1000);
  CHECK(full.size() == 1000);
  CHECK(full.front() == 1);
  CHECK(full.back() == 1000);

  const auto strided = ladder_timesteps(s, 50);
  CHECK(strided.size() == 50);
  CHECK(strided.front() == 20);
  CHECK(strided[1] == 40);
  CHECK(strided.back() == 1000);

  CHECK_THROWS_AS(ladder_timesteps(s, 1001), std::invalid_argument);
  CHECK_THROWS_AS(ladder_timesteps(s, 0), std::invalid_argument);
}

TEST_CASE("reverse_step with zero eps_hat and no noise divides by sqrt(alpha)") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = random_image(4, 4, 3, RngStream(2, "x"));
  const ImageTensor zeros = ImageTensor::zeros(4, 4, 3);
  for (int t = 1; t <= 10; ++t) {
    const ImageTensor out = reverse_step(x, t, zeros, s, nullptr);
    const double inv = 1.0 / std::sqrt(s.alpha(t));
    for (size_t i = 0; i < x.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(x.data[i] * inv).epsilon(1e-15));
  }
}

TEST_CASE("reverse_step matches a hand-computed 2x2 case") {
  // T = 1, beta_1 = 0.5: mu = (x - 0.5 / sqrt(0.5) * eps) / sqrt(0.5).
  const auto s = NoiseSchedule::linear(1, 0.5, 0.5);
  ImageTensor x(2, 2, 1);
  x.data = {0.1, -0.4, 0.8, 0.0};
  ImageTensor eps(2, 2, 1);
  eps.data = {0.5, 0.25, -1.0, 2.0};

  const ImageTensor out = reverse_step(x, 1, eps, s, nullptr);
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double mu = (x.data[i] - 0.5 / std::sqrt(1.0 - 0.5) * eps.data[i]) /
                      std::sqrt(0.5);
    CHECK(std::abs(out.data[i] - mu) <= 1e-12);
  }

  // With explicit noise the sqrt(beta) term is added.
  ImageTensor noise(2, 2, 1);
  noise.data = {1.0, -1.0, 0.5, 0.0};
  const ImageTensor out2 = reverse_step(x, 1, eps, s, &noise);
  for (size_t i = 0; i < x.data.size(); ++i)
    CHECK(std::abs(out2.data[i] -
                   (out.data[i] + std::sqrt(0.5) * noise.data[i])) <= 1e-12);
}

TEST_CASE("reverse_step noise variance matches sqrt(beta)") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const int t = 6;
  const ImageTensor x = random_image(2, 2, 1, RngStream(3, "x"));
  const ImageTensor eps_hat = random_image(2, 2, 1, RngStream(3, "e"));
  RngStream rng(4, "mc");
  const int n = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const ImageTensor noise = rng.normal_image(2, 2, 1);
    const ImageTensor out = reverse_step(x, t, eps_hat, s, &noise);
    sum += out.data[0];
    sum_sq += out.data[0] * out.data[0];
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  CHECK(sd == doctest::Approx(std::sqrt(s.beta(t))).epsilon(0.03));
}

TEST_CASE("reverse_step rejects t = 0") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = ImageTensor::zeros(4, 4, 1);
  CHECK_THROWS_AS(reverse_step(x, 0, x, s, nullptr), std::invalid_argument);
}

TEST_CASE("one-step schedule inverts the forward process exactly") {
  // With T = 1 and eps_hat equal to the true forward noise, the reverse
  // mean recovers x0.
  const auto s = NoiseSchedule::linear(1, 0.37, 0.37);
  const ImageTensor x0 = random_image(6, 5, 3, RngStream(5, "x0"));
  const ImageTensor eps = random_image(6, 5, 3, RngStream(5, "eps"));
  const ImageTensor x1 = forward_sample(x0, 1, eps, s);
  const ImageTensor back = reverse_step(x1, 1, eps, s, nullptr);
  for (size_t i = 0; i < x0.data.size(); ++i)
    CHECK(std::abs(back.data[i] - x0.data[i]) <= 1e-10);
}

TEST_CASE("guided_noise endpoints are exact") {
  const ConceptTable table = two_concept_table();
  const ImageTensor eps_u = random_image(4, 4, 3, RngStream(6, "u"));
  const ImageTensor eps_c = random_image(4, 4, 3, RngStream(6, "c"));
  StubPredictor stub;
  stub.fn = [&](const ImageTensor&, int, std::span<const double> w) {
    // The null embedding is at id 0; distinguish by value.
    return std::equal(w.begin(), w.end(),
                      table.embedding(ConceptTable::kNullId).begin())
               ? eps_u
               : eps_c;
  };
  const ImageTensor x = ImageTensor::zeros(4, 4, 3);

  CHECK(guided_noise(stub, table, x, 1, 1, 0.0) == eps_u);
  CHECK(guided_noise(stub, table, x, 1, 1, 1.0) == eps_c);

  const ImageTensor mixed = guided_noise(stub, table, x, 1, 1, 7.5);
  for (size_t i = 0; i < mixed.data.size(); ++i) {
    const double expect =
        eps_u.data[i] + 7.5 * (eps_c.data[i] - eps_u.data[i]);
    CHECK(mixed.data[i] == expect);
  }
}

TEST_CASE("guided_noise is affine in the scale") {
  const ConceptTable table = two_concept_table();
  const ImageTensor eps_u = random_image(4, 4, 3, RngStream(7, "u"));
  const ImageTensor eps_c = random_image(4, 4, 3, RngStream(7, "c"));
  StubPredictor stub;
  stub.fn = [&](const ImageTensor&, int, std::span<const double> w) {
    return std::equal(w.begin(), w.end(),
                      table.embedding(ConceptTable::kNullId).begin())
               ? eps_u
               : eps_c;
  };
  const ImageTensor x = ImageTensor::zeros(4, 4, 3);
  const ImageTensor at0 = guided_noise(stub, table, x, 1, 1, 0.0);
  const ImageTensor at1 = guided_noise(stub, table, x, 1, 1, 1.0);
  const ImageTensor at2 = guided_noise(stub, table, x, 1, 1, 2.0);
  for (size_t i = 0; i < at0.data.size(); ++i)
    CHECK(std::abs((at2.data[i] - at1.data[i]) -
                   (at1.data[i] - at0.data[i])) <= 1e-12);
}

TEST_CASE("guided_noise rejects unknown concepts") {
  const ConceptTable table = two_concept_table();
  StubPredictor stub = testutil::constant_predictor(ImageTensor::zeros(4, 4, 3));
  const ImageTensor x = ImageTensor::zeros(4, 4, 3);
  CHECK_THROWS_AS(guided_noise(stub, table, x, 1, 99, 7.5),
                  std::out_of_range);
}

TEST_CASE("generate is deterministic and shape correct") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table = two_concept_table();
  // Predictor that damps the sample: eps_hat = 0.1 * x.
  StubPredictor stub;
  stub.fn = [](const ImageTensor& x, int, std::span<const double>) {
    ImageTensor out = x;
    for (double& v : out.data) v *= 0.1;
    return out;
  };
  SamplerConfig cfg;
  cfg.steps = 10;
  cfg.guidance_scale = 1.0;
  const RngStream rng(8, "gen");
  const ImageTensor a = generate(stub, table, s, cfg, 1, 8, 6, 3, rng);
  const ImageTensor b = generate(stub, table, s, cfg, 1, 8, 6, 3, rng);
  CHECK(a == b);
  CHECK(a.height == 8);
  CHECK(a.width == 6);
  CHECK(a.channels == 3);
  CHECK(a.all_finite());

  const ImageTensor c =
      generate(stub, table, s, cfg, 1, 8, 6, 3, RngStream(9, "other"));
  CHECK(!(a == c));
}

TEST_CASE("sdedit with t0 = 0 returns the reference unchanged") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table = two_concept_table();
  StubPredictor stub = testutil::constant_predictor(ImageTensor::zeros(8, 8, 3));
  SamplerConfig cfg;
  cfg.steps = 10;
  const ImageTensor ref = random_image(8, 8, 3, RngStream(10, "ref"));
  const ImageTensor out =
      sdedit(ref, 0.0, stub, table, s, cfg, 1, RngStream(11, "r"));
  CHECK(out == ref);
}

TEST_CASE("sdedit splice depth follows t0") {
  // With the zero predictor and no final-step noise, sdedit at deeper t0
  // produces larger deviation from the reference.
  const auto s = NoiseSchedule::linear(20, 0.02, 0.3);
  const ConceptTable table = two_concept_table();
  StubPredictor stub = testutil::constant_predictor(ImageTensor::zeros(8, 8, 3));
  SamplerConfig cfg;
  cfg.steps = 20;
  const ImageTensor ref = random_image(8, 8, 3, RngStream(12, "ref"));

  auto mean_abs_diff = [&](double t0) {
    double total = 0.0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
      const ImageTensor out = sdedit(ref, t0, stub, table, s, cfg, 1,
                                     RngStream(13, "rep", rep));
      double d = 0.0;
      for (size_t i = 0; i < ref.data.size(); ++i)
        d += std::abs(out.data[i] - ref.data[i]);
      total += d / ref.data.size();
    }
    return total / reps;
  };

  const double weak = mean_abs_diff(0.1);
  const double mid = mean_abs_diff(0.5);
  const double strong = mean_abs_diff(0.9);
  CHECK(weak < mid);
  CHECK(mid < strong);
}

TEST_CASE("inpaint_blend boundary masks") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = random_image(4, 4, 3, RngStream(14, "x"));
  const ImageTensor ref = random_image(4, 4, 3, RngStream(14, "ref"));
  const ImageTensor eta = random_image(4, 4, 3, RngStream(14, "eta"));

  const ImageTensor keep_none =
      inpaint_blend(x, ref, MaskTensor::zeros(4, 4), 5, eta, s);
  CHECK(keep_none == x);

  const ImageTensor zeros_eta = ImageTensor::zeros(4, 4, 3);
  const ImageTensor keep_all =
      inpaint_blend(x, ref, MaskTensor::ones(4, 4), 5, zeros_eta, s);
  const double scale = std::sqrt(s.alpha_bar(5));
  for (size_t i = 0; i < ref.data.size(); ++i)
    CHECK(keep_all.data[i] == scale * ref.data[i]);
}

TEST_CASE("inpaint_blend checkerboard matches the per-pixel oracle") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = random_image(4, 4, 3, RngStream(15, "x"));
  const ImageTensor ref = random_image(4, 4, 3, RngStream(15, "ref"));
  const ImageTensor eta = random_image(4, 4, 3, RngStream(15, "eta"));
  MaskTensor v(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) v.at(y, xx) = (y + xx) % 2;

  const int t = 7;
  const ImageTensor out = inpaint_blend(x, ref, v, t, eta, s);
  const double sig = std::sqrt(s.alpha_bar(t));
  const double noi = std::sqrt(1.0 - s.alpha_bar(t));
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx)
      for (int c = 0; c < 3; ++c) {
        const double branch = v.at(y, xx) == 1.0
                                  ? sig * ref.at(y, xx, c) +
                                        noi * eta.at(y, xx, c)
                                  : x.at(y, xx, c);
        CHECK(out.at(y, xx, c) == branch);
      }
}

TEST_CASE("inpaint_blend is convex for fractional masks") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = random_image(4, 4, 1, RngStream(16, "x"));
  const ImageTensor ref = random_image(4, 4, 1, RngStream(16, "ref"));
  const ImageTensor eta = random_image(4, 4, 1, RngStream(16, "eta"));
  MaskTensor v(4, 4);
  RngStream rng(16, "mask");
  for (double& m : v.data) m = rng.uniform();

  const int t = 3;
  const ImageTensor out = inpaint_blend(x, ref, v, t, eta, s);
  const double sig = std::sqrt(s.alpha_bar(t));
  const double noi = std::sqrt(1.0 - s.alpha_bar(t));
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) {
      const double a = x.at(y, xx, 0);
      const double b = sig * ref.at(y, xx, 0) + noi * eta.at(y, xx, 0);
      const double m = v.at(y, xx);
      const double expect = (1.0 - m) * a + m * b;
      CHECK(std::abs(out.at(y, xx, 0) - expect) <= 1e-15);
      CHECK(out.at(y, xx, 0) <= std::max(a, b) + 1e-15);
      CHECK(out.at(y, xx, 0) >= std::min(a, b) - 1e-15);
    }
}

TEST_CASE("inpaint_blend is idempotent for binary masks with the same eta") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = random_image(4, 4, 3, RngStream(17, "x"));
  const ImageTensor ref = random_image(4, 4, 3, RngStream(17, "ref"));
  const ImageTensor eta = random_image(4, 4, 3, RngStream(17, "eta"));
  MaskTensor v(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) v.at(y, xx) = (y * 4 + xx) % 3 == 0;

  const ImageTensor once = inpaint_blend(x, ref, v, 4, eta, s);
  const ImageTensor twice = inpaint_blend(once, ref, v, 4, eta, s);
  CHECK(once == twice);
}

TEST_CASE("inpaint_blend validates masks and timestep") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ImageTensor x = ImageTensor::zeros(4, 4, 1);
  MaskTensor bad(4, 4);
  bad.at(0, 0) = 1.5;
  CHECK_THROWS_AS(inpaint_blend(x, x, bad, 1, x, s), std::invalid_argument);
  CHECK_THROWS_AS(inpaint_blend(x, x, MaskTensor::zeros(4, 4), 11, x, s),
                  std::invalid_argument);
  // t = 0 is allowed (clean paste).
  CHECK_NOTHROW(inpaint_blend(x, x, MaskTensor::zeros(4, 4), 0, x, s));
}

TEST_CASE("sdedit_masked with an all-ones preserve mask returns the reference") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table = two_concept_table();
  StubPredictor stub = testutil::constant_predictor(ImageTensor::zeros(8, 8, 3));
  SamplerConfig cfg;
  cfg.steps = 10;
  const ImageTensor ref = random_image(8, 8, 3, RngStream(18, "ref"));
  const ImageTensor out = sdedit_masked(ref, MaskTensor::ones(8, 8), 0.7, stub,
                                        table, s, cfg, 1, RngStream(19, "r"));
  CHECK(out == ref);
}

TEST_CASE("sdedit_masked with an all-zeros mask reproduces sdedit bit for bit") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table = two_concept_table();
  StubPredictor stub;
  stub.fn = [](const ImageTensor& x, int, std::span<const double>) {
    ImageTensor out = x;
    for (double& v : out.data) v *= 0.2;
    return out;
  };
  SamplerConfig cfg;
  cfg.steps = 10;
  const ImageTensor ref = random_image(8, 8, 3, RngStream(20, "ref"));
  const RngStream rng(21, "same");
  const ImageTensor plain = sdedit(ref, 0.6, stub, table, s, cfg, 1, rng);
  const ImageTensor masked = sdedit_masked(ref, MaskTensor::zeros(8, 8), 0.6,
                                           stub, table, s, cfg, 1, rng);
  CHECK(plain == masked);
}

TEST_CASE("sampler rejects invalid configs") {
  const auto s = NoiseSchedule::linear(10, 0.02, 0.3);
  const ConceptTable table = two_concept_table();
  StubPredictor stub = testutil::constant_predictor(ImageTensor::zeros(8, 8, 3));
  SamplerConfig cfg;
  cfg.steps = 11;  // exceeds T
  CHECK_THROWS_AS(
      generate(stub, table, s, cfg, 1, 8, 8, 3, RngStream(22, "r")),
      std::invalid_argument);

  cfg.steps = 10;
  const ImageTensor ref = random_image(8, 8, 3, RngStream(23, "ref"));
  CHECK_THROWS_AS(
      sdedit(ref, 1.0001, stub, table, s, cfg, 1, RngStream(24, "r")),
      std::invalid_argument);
}
