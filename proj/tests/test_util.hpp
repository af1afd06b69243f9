// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "dafkit/nn/epsilon_net.hpp"
#include "dafkit/rng.hpp"
#include "dafkit/tensor.hpp"

namespace dafkit::testutil {

inline ImageTensor random_image(int h, int w, int c, RngStream rng) {
  ImageTensor img(h, w, c);
  for (double& v : img.data) v = 2.0 * rng.uniform() - 1.0;
  return img;
}

struct StubPredictor : NoisePredictor {
  std::function<ImageTensor(const ImageTensor&, int, std::span<const double>)>
      fn;
  ImageTensor predict_noise(const ImageTensor& x_t, int t,
                            std::span<const double> w) const override {
    return fn(x_t, t, w);
  }
};

// Predictor returning a fixed tensor regardless of input.
inline StubPredictor constant_predictor(ImageTensor value) {
  StubPredictor stub;
  stub.fn = [value = std::move(value)](const ImageTensor&, int,
                                       std::span<const double>) {
    return value;
  };
  return stub;
}

// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("dafkit_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dafkit::testutil
