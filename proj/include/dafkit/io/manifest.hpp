// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dafkit {

// Record of one CLI run: resolved config hash, inputs, produced files with
// content hashes, wall-clock timings.
struct RunManifest {
  std::string command;
  std::string config_sha256;
  std::vector<std::string> inputs;

  struct OutputFile {
    std::string path;  // relative to the output directory
    std::string sha256;
    uint64_t bytes = 0;
  };
  std::vector<OutputFile> outputs;
  std::map<std::string, double> timings_ms;
  std::map<std::string, double> metrics;

  // Hashes `file` and appends it (path stored relative to base).
  void add_output(const std::filesystem::path& base,
                  const std::filesystem::path& file);

  // Every file under base (recursive), sorted by path.
  void add_output_tree(const std::filesystem::path& base,
                       const std::filesystem::path& subdir);

  void write(const std::filesystem::path& path) const;
};

}  // namespace dafkit
