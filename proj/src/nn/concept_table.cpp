// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/nn/concept_table.hpp"

#include <stdexcept>

namespace dafkit {

ConceptTable::ConceptTable(int dim, RngStream init_rng, double init_scale)
    : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("ConceptTable: dim must be >= 1");
  std::vector<double> null_w(dim);
  for (double& v : null_w) v = init_scale * init_rng.normal();
  add("null", std::move(null_w), true);
}

int ConceptTable::add(const std::string& name, std::vector<double> embedding,
                      bool trainable) {
  if (dim_ == 0) dim_ = static_cast<int>(embedding.size());
  if (static_cast<int>(embedding.size()) != dim_)
    throw std::invalid_argument("ConceptTable: embedding length mismatch for " +
                                name);
  if (has_name(name))
    throw std::invalid_argument("ConceptTable: duplicate entry " + name);
  entries_.push_back({name, std::move(embedding), trainable});
  return size() - 1;
}

int ConceptTable::add_from_null(const std::string& name, bool trainable) {
  if (entries_.empty())
    throw std::invalid_argument("ConceptTable: no null embedding present");
  if (has_name(name)) {
    const int id = id_of(name);
    entries_[id].embedding = entries_[kNullId].embedding;
    entries_[id].trainable = trainable;
    return id;
  }
  return add(name, entries_[kNullId].embedding, trainable);
}

bool ConceptTable::has_name(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

int ConceptTable::id_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (entries_[i].name == name) return i;
  throw std::out_of_range("ConceptTable: unknown concept " + name);
}

void ConceptTable::check_id(int id) const {
  if (!has(id))
    throw std::out_of_range("ConceptTable: unknown concept id " +
                            std::to_string(id));
}

const ConceptTable::Entry& ConceptTable::entry(int id) const {
  check_id(id);
  return entries_[id];
}

const std::vector<double>& ConceptTable::embedding(int id) const {
  check_id(id);
  return entries_[id].embedding;
}

std::vector<double>& ConceptTable::mutable_embedding(int id) {
  check_id(id);
  return entries_[id].embedding;
}

void ConceptTable::set_trainable(int id, bool trainable) {
  check_id(id);
  entries_[id].trainable = trainable;
}

bool ConceptTable::operator==(const ConceptTable& o) const {
  if (dim_ != o.dim_ || granularity_ != o.granularity_ ||
      entries_.size() != o.entries_.size())
    return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != o.entries_[i].name ||
        entries_[i].embedding != o.entries_[i].embedding ||
        entries_[i].trainable != o.entries_[i].trainable)
      return false;
  }
  return true;
}

}  // namespace dafkit
