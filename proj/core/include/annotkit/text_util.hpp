// Copyright 2026 The annotkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace annotkit {

std::string trim(std::string_view text);
std::string casefold(std::string_view text);

/// Labels compare equal after trimming and ASCII case folding.
inline std::string normalize_label(std::string_view label) { return casefold(trim(label)); }

std::vector<std::string> split_whitespace(std::string_view text);

/// Whitespace-token approximation used for mock token accounting.
std::size_t whitespace_token_count(std::string_view text);

std::string sha256_hex(std::string_view data);

/// FNV-1a over bytes, then finalized with splitmix64. Stable across platforms.
std::uint64_t stable_hash64(std::string_view data, std::uint64_t seed = 0);

/// Portable deterministic generator. std::uniform_*_distribution output is
/// implementation-defined, so doubles are produced from raw bits here.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    double gaussian();

private:
    std::uint64_t state_;
};

// CSV (RFC 4180 quoting).
std::vector<std::vector<std::string>> parse_csv(std::string_view content);
std::string csv_escape(std::string_view field);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void append_file(const std::filesystem::path& path, std::string_view content);

/// Complete lines of a JSONL file; a trailing line without '\n' (torn write)
/// is dropped.
std::vector<std::string> read_complete_lines(const std::filesystem::path& path);

}  // namespace annotkit
