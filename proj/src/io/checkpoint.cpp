// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/io/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "dafkit/io/atomic_file.hpp"
#include "dafkit/io/hash.hpp"

namespace dafkit {

namespace {

class Writer {
 public:
  void u8(uint8_t v) { bytes_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void i32(int32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw std::invalid_argument("string too long");
    u16(static_cast<uint16_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> bytes)
      : bytes_(std::move(bytes)) {}

  uint8_t u8() { return bytes_.at(take(1)); }
  uint16_t u16() { uint16_t v; copy(&v, 2); return v; }
  uint32_t u32() { uint32_t v; copy(&v, 4); return v; }
  int32_t i32() { int32_t v; copy(&v, 4); return v; }
  float f32() { float v; copy(&v, 4); return v; }
  double f64() { double v; copy(&v, 8); return v; }
  std::string str() {
    const uint16_t n = u16();
    std::string s(n, '\0');
    copy(s.data(), n);
    return s;
  }
  void copy(void* out, size_t n) {
    std::memcpy(out, bytes_.data() + take(n), n);
  }

 private:
  size_t take(size_t n) {
    if (pos_ + n > bytes_.size())
      throw std::runtime_error("checkpoint: truncated file");
    const size_t at = pos_;
    pos_ += n;
    return at;
  }
  std::vector<unsigned char> bytes_;
  size_t pos_ = 0;
};

void write_params_f32(Writer& w, const std::vector<ConstParamRef>& params) {
  w.u32(static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<uint32_t>(p.shape.size()));
    size_t expect = 1;
    for (int d : p.shape) {
      w.i32(d);
      expect *= static_cast<size_t>(d);
    }
    if (expect != p.data->size())
      throw std::logic_error("checkpoint: shape mismatch for " + p.name);
    for (double v : *p.data) w.f32(static_cast<float>(v));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const NoiseSchedule& schedule, const EpsilonNet& net,
                     const ConceptTable& table, int resolution,
                     const std::string& config_text) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(1);  // version

  w.u32(static_cast<uint32_t>(schedule.T()));
  for (double b : schedule.betas()) w.f64(b);

  const EpsilonNet::Config& cfg = net.config();
  w.i32(cfg.in_channels);
  w.i32(cfg.c1);
  w.i32(cfg.c2);
  w.i32(cfg.c3);
  w.i32(cfg.cond_dim);
  w.i32(cfg.sin_dim);
  w.i32(resolution);

  write_params_f32(w, net.params());

  w.u8(table.granularity() == ConceptTable::Granularity::per_class ? 0 : 1);
  w.u32(static_cast<uint32_t>(table.size()));
  for (const auto& entry : table.entries()) {
    w.str(entry.name);
    w.u8(entry.trainable ? 1 : 0);
    w.u32(static_cast<uint32_t>(entry.embedding.size()));
    for (double v : entry.embedding) w.f32(static_cast<float>(v));
  }

  if (config_text.size() > 0xffffffffull)
    throw std::invalid_argument("checkpoint: config text too large");
  w.u32(static_cast<uint32_t>(config_text.size()));
  w.raw(config_text.data(), config_text.size());

  atomic_write_file(path, w.bytes());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file_bytes(path));

  char magic[8];
  r.copy(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic (not a DAFKIT1 file)");
  const uint32_t version = r.u32();
  if (version != 1)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));

  const uint32_t t_count = r.u32();
  std::vector<double> betas(t_count);
  for (auto& b : betas) b = r.f64();

  EpsilonNet::Config cfg;
  cfg.in_channels = r.i32();
  cfg.c1 = r.i32();
  cfg.c2 = r.i32();
  cfg.c3 = r.i32();
  cfg.cond_dim = r.i32();
  cfg.sin_dim = r.i32();
  const int resolution = r.i32();

  EpsilonNet net(cfg, RngStream(0, "checkpoint_load"));
  auto params = net.params();
  const uint32_t n_params = r.u32();
  if (n_params != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (auto& p : params) {
    const std::string name = r.str();
    if (name != p.name)
      throw std::runtime_error("checkpoint: unexpected parameter " + name);
    const uint32_t ndim = r.u32();
    size_t expect = 1;
    for (uint32_t d = 0; d < ndim; ++d)
      expect *= static_cast<size_t>(r.i32());
    if (expect != p.data->size())
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    for (double& v : *p.data) v = static_cast<double>(r.f32());
  }

  ConceptTable table;
  const uint8_t gran = r.u8();
  const uint32_t n_entries = r.u32();
  for (uint32_t i = 0; i < n_entries; ++i) {
    const std::string name = r.str();
    const bool trainable = r.u8() != 0;
    const uint32_t dim = r.u32();
    std::vector<double> w(dim);
    for (auto& v : w) v = static_cast<double>(r.f32());
    table.add(name, std::move(w), trainable);
  }
  table.set_granularity(gran == 0 ? ConceptTable::Granularity::per_class
                                  : ConceptTable::Granularity::per_image);

  const uint32_t cfg_len = r.u32();
  std::string config_text(cfg_len, '\0');
  r.copy(config_text.data(), cfg_len);

  return {NoiseSchedule::from_betas(std::move(betas)), std::move(net),
          std::move(table), resolution, std::move(config_text)};
}

std::string theta_sha256(const EpsilonNet& net) {
  Writer w;
  write_params_f32(w, net.params());
  return sha256_hex(std::span<const unsigned char>(w.bytes().data(),
                                                   w.bytes().size()));
}

}  // namespace dafkit
