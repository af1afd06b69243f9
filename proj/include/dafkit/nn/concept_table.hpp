// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dafkit/rng.hpp"

namespace dafkit {

// Embedding vectors conditioning the noise predictor. Entry 0 is always the
// class-agnostic null embedding (the "a photo" analog); new concepts are
// initialized from it. Per-class granularity keeps one entry per class,
// per-image keeps one per (class, training image).
class ConceptTable {
 public:
  enum class Granularity { per_class, per_image };

  struct Entry {
    std::string name;
    std::vector<double> embedding;
    bool trainable = false;
  };

  ConceptTable() = default;
  // Creates the table with a randomly initialized trainable null embedding.
  ConceptTable(int dim, RngStream init_rng, double init_scale = 0.1);

  static constexpr int kNullId = 0;

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(entries_.size()); }

  // Adds an entry and returns its id. Name must be unique.
  int add(const std::string& name, std::vector<double> embedding,
          bool trainable);

  // Creates (or resets) an entry initialized from the null embedding.
  int add_from_null(const std::string& name, bool trainable = true);

  bool has(int id) const { return id >= 0 && id < size(); }
  bool has_name(const std::string& name) const;

  int id_of(const std::string& name) const;  // throws if missing

  const Entry& entry(int id) const;
  const std::vector<double>& embedding(int id) const;
  std::vector<double>& mutable_embedding(int id);
  void set_trainable(int id, bool trainable);

  const std::vector<Entry>& entries() const { return entries_; }

  Granularity granularity() const { return granularity_; }
  void set_granularity(Granularity g) { granularity_ = g; }

  bool operator==(const ConceptTable& o) const;

 private:
  void check_id(int id) const;

  int dim_ = 0;
  Granularity granularity_ = Granularity::per_class;
  std::vector<Entry> entries_;
};

}  // namespace dafkit
