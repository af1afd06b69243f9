// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/augment/store.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>
#include <thread>

#include "dafkit/errors.hpp"
#include "dafkit/image_ops.hpp"
#include "dafkit/io/atomic_file.hpp"
#include "dafkit/io/png_io.hpp"

// Vendored single-header nlohmann/json lives at vendor/json.hpp.
#if !__has_include(<nlohmann/json.hpp>)
#error "nlohmann/json not found"
#endif

namespace dafkit {

using nlohmann::json;

bool SyntheticStore::complete() const {
  if (records_.empty()) return false;
  for (const auto& r : records_)
    if (!r.ok()) return false;
  return true;
}

namespace {

std::string seed_hex(uint64_t seed) {
  std::ostringstream os;
  os << std::hex << seed;
  return os.str();
}

uint64_t seed_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

std::filesystem::path record_path(const std::filesystem::path& dir,
                                  const StoreRecord& r) {
  return dir / std::to_string(r.label) / std::to_string(r.i) /
         ("aug_" + std::to_string(r.j) + ".png");
}

// Applies one policy entry to a source image.
ImageTensor apply_entry(const PolicyEntry& entry, const StoreSource& src,
                        const GenerationContext& ctx, const RngStream& rng) {
  switch (entry.kind) {
    case TransformKind::identity:
      return src.image;
    case TransformKind::horizontal_flip:
      return mirror_horizontal(src.image);
    case TransformKind::vertical_flip:
      return mirror_vertical(src.image);
    case TransformKind::sdedit:
      return sdedit(src.image, entry.t0, *ctx.net, *ctx.table, *ctx.schedule,
                    ctx.sampler, src.concept_id, rng.child("gen"));
    case TransformKind::sdedit_masked: {
      if (!src.mask.has_value())
        throw std::invalid_argument("masked policy entry needs a source mask");
      const MaskTensor dilated = dilate_mask(*src.mask, ctx.mask_dilation);
      // Foreground mode regenerates the object (background pinned);
      // background mode regenerates everything but the object.
      const MaskTensor preserve = entry.mask_role == MaskRole::foreground
                                      ? invert_mask(dilated)
                                      : dilated;
      return sdedit_masked(src.image, preserve, entry.t0, *ctx.net, *ctx.table,
                           *ctx.schedule, ctx.sampler, src.concept_id,
                           rng.child("gen"));
    }
  }
  throw std::logic_error("apply_entry: unhandled transform kind");
}

void generate_record(const std::vector<StoreSource>& sources,
                     const AugmentationPolicy& policy,
                     const GenerationContext& ctx, uint64_t seed, int i, int j,
                     const std::filesystem::path* resume_dir,
                     StoreRecord& out) {
  const StoreSource& src = sources[i];
  RngStream rng(seed, "store", static_cast<uint64_t>(i),
                static_cast<uint64_t>(j));
  const int entry_idx = choose_augmentation(policy, rng);
  const PolicyEntry& entry = policy.entry(entry_idx);

  out.i = i;
  out.j = j;
  out.label = src.label;
  out.policy_entry = entry_idx;
  out.t0 = entry.t0;
  out.seed = rng.key();
  out.concept_id = src.concept_id;

  if (resume_dir) {
    const auto path = record_path(*resume_dir, out);
    if (std::filesystem::exists(path)) {
      out.image = read_png(path);
      out.status = "ok";
      return;
    }
  }

  try {
    out.image = apply_entry(entry, src, ctx, rng);
    quantize_to_pixel_grid(out.image);
    out.status = "ok";
  } catch (const SamplingDivergence& e) {
    out.status = std::string("error: ") + e.what();
  }
}

}  // namespace

SyntheticStore build_store(const std::vector<StoreSource>& sources,
                           const AugmentationPolicy& policy, int m,
                           const GenerationContext& ctx, uint64_t seed,
                           int workers,
                           const std::filesystem::path* resume_dir) {
  if (sources.empty())
    throw std::invalid_argument("build_store: no source images");
  if (m < 1) throw std::invalid_argument("build_store: M must be >= 1");

  const int n = static_cast<int>(sources.size());
  SyntheticStore store(n, m);
  const int total = n * m;

  auto work = [&](int begin, int end) {
    for (int r = begin; r < end; ++r)
      generate_record(sources, policy, ctx, seed, r / m, r % m, resume_dir,
                      store.at(r / m, r % m));
  };

  if (workers <= 1 || total < 2) {
    work(0, total);
  } else {
    const int n_threads = std::min(workers, total);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
      const int begin = total * w / n_threads;
      const int end = total * (w + 1) / n_threads;
      pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return store;
}

SyntheticStore identity_store(const std::vector<StoreSource>& sources, int m) {
  if (sources.empty())
    throw std::invalid_argument("identity_store: no source images");
  if (m < 1) throw std::invalid_argument("identity_store: M must be >= 1");
  const int n = static_cast<int>(sources.size());
  SyntheticStore store(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      StoreRecord& r = store.at(i, j);
      r.i = i;
      r.j = j;
      r.label = sources[i].label;
      r.policy_entry = 0;
      r.t0 = 0.0;
      r.seed = 0;
      r.concept_id = sources[i].concept_id;
      r.status = "ok";
      r.image = sources[i].image;
    }
  }
  return store;
}

void SyntheticStore::save(const std::filesystem::path& dir) const {
  json manifest;
  manifest["n"] = n_;
  manifest["m"] = m_;
  manifest["complete"] = complete();
  json records = json::array();
  for (const auto& r : records_) {
    json jr;
    jr["i"] = r.i;
    jr["j"] = r.j;
    jr["label"] = r.label;
    jr["policy_entry"] = r.policy_entry;
    jr["t0"] = r.t0;
    jr["seed"] = seed_hex(r.seed);
    jr["concept_id"] = r.concept_id;
    jr["status"] = r.status;
    if (r.ok()) {
      const auto path = record_path(dir, r);
      write_png(path, r.image);
      jr["path"] = std::filesystem::relative(path, dir).string();
    }
    records.push_back(std::move(jr));
  }
  manifest["records"] = std::move(records);
  atomic_write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

SyntheticStore SyntheticStore::load(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_file_text(dir / "manifest.json"));
  SyntheticStore store(manifest.at("n").get<int>(),
                       manifest.at("m").get<int>());
  for (const auto& jr : manifest.at("records")) {
    StoreRecord r;
    r.i = jr.at("i").get<int>();
    r.j = jr.at("j").get<int>();
    r.label = jr.at("label").get<int>();
    r.policy_entry = jr.at("policy_entry").get<int>();
    r.t0 = jr.at("t0").get<double>();
    r.seed = seed_from_hex(jr.at("seed").get<std::string>());
    r.concept_id = jr.at("concept_id").get<int>();
    r.status = jr.at("status").get<std::string>();
    if (r.ok()) r.image = read_png(dir / jr.at("path").get<std::string>());
    store.at(r.i, r.j) = std::move(r);
  }
  return store;
}

}  // namespace dafkit
