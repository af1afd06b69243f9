// Copyright 2026 The dafkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dafkit {

// Writes to a temporary sibling and renames into place, creating parent
// directories as needed.
void atomic_write_file(const std::filesystem::path& path,
                       const std::vector<unsigned char>& bytes);
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& text);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

}  // namespace dafkit
