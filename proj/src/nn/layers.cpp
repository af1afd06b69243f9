// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/nn/layers.hpp"

#include <stdexcept>

namespace dafkit {

Conv2D::Conv2D(int in_channels, int out_channels, int kernel, int stride_,
               int pad_)
    : in_ch(in_channels),
      out_ch(out_channels),
      ksize(kernel),
      stride(stride_),
      pad(pad_),
      weight(static_cast<size_t>(out_channels) * kernel * kernel * in_channels,
             0.0),
      bias(out_channels, 0.0) {}

void Conv2D::init(RngStream rng, double weight_scale) {
  const double std_dev =
      weight_scale * std::sqrt(2.0 / (static_cast<double>(in_ch) * ksize * ksize));
  for (double& w : weight) w = std_dev * rng.normal();
  for (double& b : bias) b = 0.0;
}

ImageTensor Conv2D::forward(const ImageTensor& x) const {
  const int oh = out_extent(x.height);
  const int ow = out_extent(x.width);
  ImageTensor y(oh, ow, out_ch);

  std::vector<double> acc(out_ch);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int oc = 0; oc < out_ch; ++oc) acc[oc] = bias[oc];
      for (int ky = 0; ky < ksize; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= x.height) continue;
        for (int kx = 0; kx < ksize; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= x.width) continue;
          const double* xrow = &x.data[(static_cast<size_t>(iy) * x.width + ix) * in_ch];
          const size_t tap = (static_cast<size_t>(ky) * ksize + kx) * in_ch;
          for (int oc = 0; oc < out_ch; ++oc) {
            const double* wrow =
                &weight[static_cast<size_t>(oc) * ksize * ksize * in_ch + tap];
            double s = 0.0;
            for (int ic = 0; ic < in_ch; ++ic) s += xrow[ic] * wrow[ic];
            acc[oc] += s;
          }
        }
      }
      double* yrow = &y.data[(static_cast<size_t>(oy) * ow + ox) * out_ch];
      for (int oc = 0; oc < out_ch; ++oc) yrow[oc] = acc[oc];
    }
  }
  return y;
}

void Conv2D::backward(const ImageTensor& x, const ImageTensor& grad_y,
                      ImageTensor* grad_x, std::vector<double>* grad_w,
                      std::vector<double>* grad_b) const {
  const int oh = grad_y.height;
  const int ow = grad_y.width;

  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double* gy =
          &grad_y.data[(static_cast<size_t>(oy) * ow + ox) * out_ch];
      if (grad_b) {
        for (int oc = 0; oc < out_ch; ++oc) (*grad_b)[oc] += gy[oc];
      }
      for (int ky = 0; ky < ksize; ++ky) {
        const int iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= x.height) continue;
        for (int kx = 0; kx < ksize; ++kx) {
          const int ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= x.width) continue;
          const size_t xoff = (static_cast<size_t>(iy) * x.width + ix) * in_ch;
          const double* xrow = &x.data[xoff];
          const size_t tap = (static_cast<size_t>(ky) * ksize + kx) * in_ch;
          for (int oc = 0; oc < out_ch; ++oc) {
            const double g = gy[oc];
            if (g == 0.0) continue;
            const size_t woff =
                static_cast<size_t>(oc) * ksize * ksize * in_ch + tap;
            if (grad_w) {
              double* gw = &(*grad_w)[woff];
              for (int ic = 0; ic < in_ch; ++ic) gw[ic] += g * xrow[ic];
            }
            if (grad_x) {
              const double* wrow = &weight[woff];
              double* gx = &grad_x->data[xoff];
              for (int ic = 0; ic < in_ch; ++ic) gx[ic] += g * wrow[ic];
            }
          }
        }
      }
    }
  }
}

Linear::Linear(int in, int out)
    : in_dim(in),
      out_dim(out),
      weight(static_cast<size_t>(in) * out, 0.0),
      bias(out, 0.0) {}

void Linear::init(RngStream rng, double weight_scale) {
  const double std_dev = weight_scale * std::sqrt(2.0 / (in_dim + out_dim));
  for (double& w : weight) w = std_dev * rng.normal();
  for (double& b : bias) b = 0.0;
}

std::vector<double> Linear::forward(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != in_dim)
    throw std::invalid_argument("Linear::forward: dimension mismatch");
  std::vector<double> y(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    const double* wrow = &weight[static_cast<size_t>(o) * in_dim];
    double s = bias[o];
    for (int i = 0; i < in_dim; ++i) s += wrow[i] * x[i];
    y[o] = s;
  }
  return y;
}

void Linear::backward(const std::vector<double>& x,
                      const std::vector<double>& grad_y,
                      std::vector<double>* grad_x, std::vector<double>* grad_w,
                      std::vector<double>* grad_b) const {
  for (int o = 0; o < out_dim; ++o) {
    const double g = grad_y[o];
    if (grad_b) (*grad_b)[o] += g;
    const size_t off = static_cast<size_t>(o) * in_dim;
    if (grad_w) {
      for (int i = 0; i < in_dim; ++i) (*grad_w)[off + i] += g * x[i];
    }
    if (grad_x) {
      for (int i = 0; i < in_dim; ++i) (*grad_x)[i] += g * weight[off + i];
    }
  }
}

ImageTensor silu_forward(const ImageTensor& pre) {
  ImageTensor y(pre.height, pre.width, pre.channels);
  for (size_t i = 0; i < pre.data.size(); ++i) y.data[i] = silu(pre.data[i]);
  return y;
}

void silu_backward(const ImageTensor& pre, const ImageTensor& grad_y,
                   ImageTensor& grad_pre) {
  for (size_t i = 0; i < pre.data.size(); ++i)
    grad_pre.data[i] += grad_y.data[i] * silu_grad(pre.data[i]);
}

ImageTensor upsample2_forward(const ImageTensor& x) {
  ImageTensor y(x.height * 2, x.width * 2, x.channels);
  for (int yy = 0; yy < y.height; ++yy) {
    const int sy = yy / 2;
    for (int xx = 0; xx < y.width; ++xx) {
      const int sx = xx / 2;
      const double* src =
          &x.data[(static_cast<size_t>(sy) * x.width + sx) * x.channels];
      double* dst =
          &y.data[(static_cast<size_t>(yy) * y.width + xx) * y.channels];
      for (int c = 0; c < x.channels; ++c) dst[c] = src[c];
    }
  }
  return y;
}

void upsample2_backward(const ImageTensor& grad_y, ImageTensor& grad_x) {
  for (int yy = 0; yy < grad_y.height; ++yy) {
    const int sy = yy / 2;
    for (int xx = 0; xx < grad_y.width; ++xx) {
      const int sx = xx / 2;
      const double* src =
          &grad_y.data[(static_cast<size_t>(yy) * grad_y.width + xx) *
                       grad_y.channels];
      double* dst = &grad_x.data[(static_cast<size_t>(sy) * grad_x.width + sx) *
                                 grad_x.channels];
      for (int c = 0; c < grad_y.channels; ++c) dst[c] += src[c];
    }
  }
}

void Adam::step(const std::vector<ParamRef>& params,
                const std::vector<std::vector<double>>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("Adam::step: params/grads size mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].data->size(), 0.0);
      v_[i].assign(params[i].data->size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    std::vector<double>& p = *params[i].data;
    const std::vector<double>& g = grads[i];
    if (p.size() != g.size())
      throw std::invalid_argument("Adam::step: gradient size mismatch for " +
                                  params[i].name);
    for (size_t j = 0; j < p.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace dafkit
