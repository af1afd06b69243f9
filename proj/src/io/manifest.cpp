// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/io/manifest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "dafkit/io/atomic_file.hpp"
#include "dafkit/io/hash.hpp"

namespace dafkit {

void RunManifest::add_output(const std::filesystem::path& base,
                             const std::filesystem::path& file) {
  OutputFile out;
  out.path = std::filesystem::relative(file, base).string();
  out.sha256 = sha256_file(file);
  out.bytes = static_cast<uint64_t>(std::filesystem::file_size(file));
  outputs.push_back(std::move(out));
}

void RunManifest::add_output_tree(const std::filesystem::path& base,
                                  const std::filesystem::path& subdir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(subdir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) add_output(base, f);
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config_sha256"] = config_sha256;
  j["inputs"] = inputs;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : outputs) {
    nlohmann::json jo;
    jo["path"] = o.path;
    jo["sha256"] = o.sha256;
    jo["bytes"] = o.bytes;
    outs.push_back(std::move(jo));
  }
  j["outputs"] = std::move(outs);
  j["timings_ms"] = timings_ms;
  j["metrics"] = metrics;
  atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace dafkit
