// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dafkit/io/atomic_file.hpp"

#include <fstream>
#include <stdexcept>

namespace dafkit {

namespace {

void write_impl(const std::filesystem::path& path, const char* data,
                size_t size) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

void atomic_write_file(const std::filesystem::path& path,
                       const std::vector<unsigned char>& bytes) {
  write_impl(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& text) {
  write_impl(path, text.data(), text.size());
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<unsigned char> bytes(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw std::runtime_error("read failed: " + path.string());
  return bytes;
}

std::string read_file_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace dafkit
