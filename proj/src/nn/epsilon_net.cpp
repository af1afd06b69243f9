// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/nn/epsilon_net.hpp"

#include <cmath>
#include <stdexcept>

namespace dafkit {

EpsilonNet::EpsilonNet(const Config& cfg, RngStream init_rng)
    : cfg_(cfg),
      conv_in_(cfg.in_channels, cfg.c1, 3, 1, 1),
      down1_(cfg.c1, cfg.c2, 3, 2, 1),
      down2_(cfg.c2, cfg.c3, 3, 2, 1),
      mid_(cfg.c3, cfg.c3, 3, 1, 1),
      up1_(cfg.c3, cfg.c2, 3, 1, 1),
      up2_(cfg.c2, cfg.c1, 3, 1, 1),
      conv_out_(cfg.c1, cfg.in_channels, 3, 1, 1),
      t_proj_(cfg.sin_dim, cfg.cond_dim),
      cond_proj_(cfg.cond_dim, cfg.c3) {
  if (cfg.sin_dim % 2 != 0)
    throw std::invalid_argument("EpsilonNet: sin_dim must be even");
  conv_in_.init(init_rng.child("conv_in"));
  down1_.init(init_rng.child("down1"));
  down2_.init(init_rng.child("down2"));
  mid_.init(init_rng.child("mid"));
  up1_.init(init_rng.child("up1"));
  up2_.init(init_rng.child("up2"));
  // Small output init keeps early training near the identity-zero predictor.
  conv_out_.init(init_rng.child("conv_out"), 0.1);
  t_proj_.init(init_rng.child("t_proj"));
  cond_proj_.init(init_rng.child("cond_proj"));
}

EpsilonNet::EpsilonNet(const EpsilonNet&) = default;
EpsilonNet& EpsilonNet::operator=(const EpsilonNet&) = default;
EpsilonNet::~EpsilonNet() = default;

std::vector<double> EpsilonNet::timestep_features(int t) const {
  std::vector<double> f(cfg_.sin_dim);
  const int half = cfg_.sin_dim / 2;
  for (int i = 0; i < half; ++i) {
    const double omega =
        std::pow(10000.0, -static_cast<double>(i) / half);
    f[2 * i] = std::sin(t * omega);
    f[2 * i + 1] = std::cos(t * omega);
  }
  return f;
}

ImageTensor EpsilonNet::forward_taped(const ImageTensor& x_t, int t,
                                      std::span<const double> w,
                                      std::unique_ptr<Tape>& tape) const {
  if (static_cast<int>(w.size()) != cfg_.cond_dim)
    throw std::invalid_argument("EpsilonNet: embedding length mismatch");
  if (x_t.channels != cfg_.in_channels)
    throw std::invalid_argument("EpsilonNet: channel count mismatch");
  if (x_t.height % 4 != 0 || x_t.width % 4 != 0)
    throw std::invalid_argument(
        "EpsilonNet: height and width must be divisible by 4");
  if (t < 1) throw std::invalid_argument("EpsilonNet: t must be >= 1");

  Tape tp;
  tp.x = x_t;
  tp.w.assign(w.begin(), w.end());
  tp.tfeat = timestep_features(t);
  tp.tproj = t_proj_.forward(tp.tfeat);
  tp.cond.resize(cfg_.cond_dim);
  for (int i = 0; i < cfg_.cond_dim; ++i) tp.cond[i] = tp.tproj[i] + tp.w[i];
  tp.cond_c3 = cond_proj_.forward(tp.cond);

  tp.a0 = conv_in_.forward(tp.x);
  tp.a1 = silu_forward(tp.a0);
  tp.b0 = down1_.forward(tp.a1);
  tp.b1 = silu_forward(tp.b0);
  tp.c0 = down2_.forward(tp.b1);
  tp.c1 = silu_forward(tp.c0);

  tp.c_cond = tp.c1;
  for (int y = 0; y < tp.c_cond.height; ++y)
    for (int x = 0; x < tp.c_cond.width; ++x)
      for (int c = 0; c < cfg_.c3; ++c) tp.c_cond.at(y, x, c) += tp.cond_c3[c];

  tp.m0 = mid_.forward(tp.c_cond);
  tp.m1 = silu_forward(tp.m0);

  tp.u_up = upsample2_forward(tp.m1);
  tp.u0 = up1_.forward(tp.u_up);
  tp.u1 = silu_forward(tp.u0);
  tp.u_skip = tp.u1;
  for (size_t i = 0; i < tp.u_skip.data.size(); ++i)
    tp.u_skip.data[i] += tp.b1.data[i];

  tp.v_up = upsample2_forward(tp.u_skip);
  tp.v0 = up2_.forward(tp.v_up);
  tp.v1 = silu_forward(tp.v0);
  tp.v_skip = tp.v1;
  for (size_t i = 0; i < tp.v_skip.data.size(); ++i)
    tp.v_skip.data[i] += tp.a1.data[i];

  ImageTensor out = conv_out_.forward(tp.v_skip);
  tape = std::make_unique<Tape>(std::move(tp));
  return out;
}

ImageTensor EpsilonNet::predict_noise(const ImageTensor& x_t, int t,
                                      std::span<const double> w) const {
  std::unique_ptr<Tape> tape;
  return forward_taped(x_t, t, w, tape);
}

EpsilonNet::Grads EpsilonNet::zero_grads() const {
  Grads g;
  for (const auto& p : params()) g.theta.emplace_back(p.data->size(), 0.0);
  g.w.assign(cfg_.cond_dim, 0.0);
  return g;
}

void EpsilonNet::backward(const Tape& tp, const ImageTensor& grad_out,
                          Grads& grads, bool want_theta) const {
  // Gradient slots follow params() order:
  // 0 conv_in.w 1 conv_in.b 2 down1.w 3 down1.b 4 down2.w 5 down2.b
  // 6 mid.w 7 mid.b 8 up1.w 9 up1.b 10 up2.w 11 up2.b
  // 12 conv_out.w 13 conv_out.b 14 t_proj.w 15 t_proj.b
  // 16 cond_proj.w 17 cond_proj.b
  auto* th = want_theta ? &grads.theta : nullptr;

  ImageTensor g_vskip(tp.v_skip.height, tp.v_skip.width, tp.v_skip.channels);
  conv_out_.backward(tp.v_skip, grad_out, &g_vskip,
                     th ? &(*th)[12] : nullptr, th ? &(*th)[13] : nullptr);

  // v_skip = silu(v0) + a1
  ImageTensor g_a1(tp.a1.height, tp.a1.width, tp.a1.channels);
  g_a1.data = g_vskip.data;  // skip branch
  ImageTensor g_v0(tp.v0.height, tp.v0.width, tp.v0.channels);
  silu_backward(tp.v0, g_vskip, g_v0);

  ImageTensor g_vup(tp.v_up.height, tp.v_up.width, tp.v_up.channels);
  up2_.backward(tp.v_up, g_v0, &g_vup, th ? &(*th)[10] : nullptr,
                th ? &(*th)[11] : nullptr);

  ImageTensor g_uskip(tp.u_skip.height, tp.u_skip.width, tp.u_skip.channels);
  upsample2_backward(g_vup, g_uskip);

  // u_skip = silu(u0) + b1
  ImageTensor g_b1(tp.b1.height, tp.b1.width, tp.b1.channels);
  g_b1.data = g_uskip.data;
  ImageTensor g_u0(tp.u0.height, tp.u0.width, tp.u0.channels);
  silu_backward(tp.u0, g_uskip, g_u0);

  ImageTensor g_uup(tp.u_up.height, tp.u_up.width, tp.u_up.channels);
  up1_.backward(tp.u_up, g_u0, &g_uup, th ? &(*th)[8] : nullptr,
                th ? &(*th)[9] : nullptr);

  ImageTensor g_m1(tp.m1.height, tp.m1.width, tp.m1.channels);
  upsample2_backward(g_uup, g_m1);

  ImageTensor g_m0(tp.m0.height, tp.m0.width, tp.m0.channels);
  silu_backward(tp.m0, g_m1, g_m0);

  ImageTensor g_ccond(tp.c_cond.height, tp.c_cond.width, tp.c_cond.channels);
  mid_.backward(tp.c_cond, g_m0, &g_ccond, th ? &(*th)[6] : nullptr,
                th ? &(*th)[7] : nullptr);

  // c_cond = silu(c0) + broadcast(cond_c3)
  std::vector<double> g_cond_c3(cfg_.c3, 0.0);
  for (int y = 0; y < g_ccond.height; ++y)
    for (int x = 0; x < g_ccond.width; ++x)
      for (int c = 0; c < cfg_.c3; ++c) g_cond_c3[c] += g_ccond.at(y, x, c);

  std::vector<double> g_cond(cfg_.cond_dim, 0.0);
  cond_proj_.backward(tp.cond, g_cond_c3, &g_cond, th ? &(*th)[16] : nullptr,
                      th ? &(*th)[17] : nullptr);

  // cond = t_proj(tfeat) + w
  for (int i = 0; i < cfg_.cond_dim; ++i) grads.w[i] += g_cond[i];
  if (th) {
    t_proj_.backward(tp.tfeat, g_cond, nullptr, &(*th)[14], &(*th)[15]);
  }

  if (!want_theta) return;  // embedding gradient never reaches the encoder

  ImageTensor g_c0(tp.c0.height, tp.c0.width, tp.c0.channels);
  silu_backward(tp.c0, g_ccond, g_c0);

  ImageTensor g_b1_conv(tp.b1.height, tp.b1.width, tp.b1.channels);
  down2_.backward(tp.b1, g_c0, &g_b1_conv, &(*th)[4], &(*th)[5]);
  for (size_t i = 0; i < g_b1.data.size(); ++i)
    g_b1.data[i] += g_b1_conv.data[i];

  ImageTensor g_b0(tp.b0.height, tp.b0.width, tp.b0.channels);
  silu_backward(tp.b0, g_b1, g_b0);

  ImageTensor g_a1_conv(tp.a1.height, tp.a1.width, tp.a1.channels);
  down1_.backward(tp.a1, g_b0, &g_a1_conv, &(*th)[2], &(*th)[3]);
  for (size_t i = 0; i < g_a1.data.size(); ++i)
    g_a1.data[i] += g_a1_conv.data[i];

  ImageTensor g_a0(tp.a0.height, tp.a0.width, tp.a0.channels);
  silu_backward(tp.a0, g_a1, g_a0);

  conv_in_.backward(tp.x, g_a0, nullptr, &(*th)[0], &(*th)[1]);
}

std::vector<ParamRef> EpsilonNet::params() {
  auto conv = [](const char* n, Conv2D& c, std::vector<ParamRef>& out) {
    out.push_back({std::string(n) + ".w", &c.weight,
                   {c.out_ch, c.ksize, c.ksize, c.in_ch}});
    out.push_back({std::string(n) + ".b", &c.bias, {c.out_ch}});
  };
  auto lin = [](const char* n, Linear& l, std::vector<ParamRef>& out) {
    out.push_back({std::string(n) + ".w", &l.weight, {l.out_dim, l.in_dim}});
    out.push_back({std::string(n) + ".b", &l.bias, {l.out_dim}});
  };
  std::vector<ParamRef> out;
  conv("conv_in", conv_in_, out);
  conv("down1", down1_, out);
  conv("down2", down2_, out);
  conv("mid", mid_, out);
  conv("up1", up1_, out);
  conv("up2", up2_, out);
  conv("conv_out", conv_out_, out);
  lin("t_proj", t_proj_, out);
  lin("cond_proj", cond_proj_, out);
  return out;
}

std::vector<ConstParamRef> EpsilonNet::params() const {
  std::vector<ConstParamRef> out;
  for (const auto& p : const_cast<EpsilonNet*>(this)->params())
    out.push_back({p.name, p.data, p.shape});
  return out;
}

bool EpsilonNet::parameters_finite() const {
  for (const auto& p : params())
    for (double v : *p.data)
      if (!std::isfinite(v)) return false;
  return true;
}

bool EpsilonNet::same_parameters(const EpsilonNet& other) const {
  const auto a = params();
  const auto b = other.params();
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (*a[i].data != *b[i].data) return false;
  return true;
}

}  // namespace dafkit
