// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dafkit/nn/layers.hpp"
#include "dafkit/rng.hpp"
#include "dafkit/tensor.hpp"

namespace dafkit {

// Anything that predicts the injected noise from a noisy sample. Samplers
// depend on this interface only, which keeps them testable against stubs.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual ImageTensor predict_noise(const ImageTensor& x_t, int t,
                                    std::span<const double> w) const = 0;
};

// Small convolutional encoder-decoder predicting the forward-process noise.
// Conditioning: sinusoidal timestep features and a concept embedding are
// projected to the bottleneck width and added per channel. Additive skip
// connections link encoder and decoder levels.
//
// Input height and width must be divisible by 4 (two stride-2 levels).
class EpsilonNet : public NoisePredictor {
 public:
  struct Config {
    int in_channels = 3;
    int c1 = 32;  // full-resolution width
    int c2 = 64;  // half-resolution width
    int c3 = 64;  // bottleneck width
    int cond_dim = 16;
    int sin_dim = 16;
  };

  // Activations retained by a forward pass for the corresponding backward.
  struct Tape {
    ImageTensor x;                     // input
    std::vector<double> w;             // conditioning embedding
    std::vector<double> tfeat;         // sinusoidal timestep features
    std::vector<double> tproj;         // t_proj output
    std::vector<double> cond;          // tproj + w
    std::vector<double> cond_c3;       // cond_proj output
    ImageTensor a0, a1;                // conv_in pre/post activation
    ImageTensor b0, b1;                // down1
    ImageTensor c0, c1;                // down2
    ImageTensor c_cond;                // c1 + broadcast(cond_c3)
    ImageTensor m0, m1;                // mid
    ImageTensor u_up, u0, u1, u_skip;  // upsample, up1 pre, post, +b1
    ImageTensor v_up, v0, v1, v_skip;  // upsample, up2 pre, post, +a1
  };

  // Gradients w.r.t. every parameter array (same order as params()) plus
  // the conditioning embedding.
  struct Grads {
    std::vector<std::vector<double>> theta;
    std::vector<double> w;
  };

  EpsilonNet(const Config& cfg, RngStream init_rng);
  EpsilonNet(const EpsilonNet&);
  EpsilonNet& operator=(const EpsilonNet&);
  EpsilonNet(EpsilonNet&&) noexcept = default;
  EpsilonNet& operator=(EpsilonNet&&) noexcept = default;
  ~EpsilonNet() override;

  ImageTensor predict_noise(const ImageTensor& x_t, int t,
                            std::span<const double> w) const override;

  // Forward pass that retains activations. The tape stays valid while the
  // net's parameters are unchanged.
  ImageTensor forward_taped(const ImageTensor& x_t, int t,
                            std::span<const double> w,
                            std::unique_ptr<Tape>& tape) const;

  // Accumulates parameter and embedding gradients for the taped pass.
  // want_theta=false skips all theta gradients (embedding-only training).
  void backward(const Tape& tape, const ImageTensor& grad_out, Grads& grads,
                bool want_theta = true) const;

  Grads zero_grads() const;

  std::vector<ParamRef> params();
  std::vector<ConstParamRef> params() const;

  const Config& config() const { return cfg_; }

  bool parameters_finite() const;

  // Exact parameter equality (freeze contracts are checked with this).
  bool same_parameters(const EpsilonNet& other) const;

 private:
  std::vector<double> timestep_features(int t) const;

  Config cfg_;
  Conv2D conv_in_, down1_, down2_, mid_, up1_, up2_, conv_out_;
  Linear t_proj_;    // sin_dim -> cond_dim
  Linear cond_proj_; // cond_dim -> c3
};

}  // namespace dafkit
