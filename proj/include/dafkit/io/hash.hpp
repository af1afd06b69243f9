// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace dafkit {

// SHA-256 of a byte span, lowercase hex.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

// FNV-1a 64-bit, used for cheap content keys (feature caches).
uint64_t fnv1a64_bytes(std::span<const unsigned char> bytes);

}  // namespace dafkit
