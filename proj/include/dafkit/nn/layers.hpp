// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dafkit/rng.hpp"
#include "dafkit/tensor.hpp"

namespace dafkit {

// Named view of one trainable array. Optimizers and checkpoints address
// parameters through these, in the owner's declared order.
struct ParamRef {
  std::string name;
  std::vector<double>* data = nullptr;
  std::vector<int> shape;
};

struct ConstParamRef {
  std::string name;
  const std::vector<double>* data = nullptr;
  std::vector<int> shape;
};

// 2D convolution, square kernel, zero padding. Activations are HWC so the
// innermost input-channel loop runs over contiguous memory on both sides.
// Weight layout: [out_ch][ky][kx][in_ch].
struct Conv2D {
  int in_ch = 0;
  int out_ch = 0;
  int ksize = 3;
  int stride = 1;
  int pad = 1;
  std::vector<double> weight;
  std::vector<double> bias;

  Conv2D() = default;
  Conv2D(int in_channels, int out_channels, int kernel, int stride_,
         int pad_);

  // He-normal weights, zero bias; weight_scale shrinks the draw (used for
  // near-zero output layers).
  void init(RngStream rng, double weight_scale = 1.0);

  int out_extent(int in_extent) const {
    return (in_extent + 2 * pad - ksize) / stride + 1;
  }

  ImageTensor forward(const ImageTensor& x) const;

  // Accumulates into grad_x / grad_w / grad_b (callers zero them first when
  // starting a fresh batch). grad_x may be null when input gradients are
  // not needed (first layer).
  void backward(const ImageTensor& x, const ImageTensor& grad_y,
                ImageTensor* grad_x, std::vector<double>* grad_w,
                std::vector<double>* grad_b) const;
};

// Dense layer, weight layout [out][in].
struct Linear {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  Linear() = default;
  Linear(int in, int out);

  void init(RngStream rng, double weight_scale = 1.0);

  std::vector<double> forward(const std::vector<double>& x) const;
  void backward(const std::vector<double>& x,
                const std::vector<double>& grad_y, std::vector<double>* grad_x,
                std::vector<double>* grad_w, std::vector<double>* grad_b) const;
};

// silu(x) = x * sigmoid(x). Smooth, so finite-difference gradient checks
// stay well conditioned.
inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

ImageTensor silu_forward(const ImageTensor& pre);
// grad wrt pre-activation: grad_pre = grad_y * silu'(pre), accumulated.
void silu_backward(const ImageTensor& pre, const ImageTensor& grad_y,
                   ImageTensor& grad_pre);

// Nearest-neighbour 2x upsample and its adjoint.
ImageTensor upsample2_forward(const ImageTensor& x);
void upsample2_backward(const ImageTensor& grad_y, ImageTensor& grad_x);

// First-order adaptive-moment optimizer. Slot i of every step call must
// refer to the same parameter array.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamRef>& params,
            const std::vector<std::vector<double>>& grads);

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace dafkit
