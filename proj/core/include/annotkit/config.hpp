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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "annotkit/annotation.hpp"
#include "annotkit/corpus_store.hpp"
#include "annotkit/geometry.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/retrieval.hpp"

namespace annotkit {

/// Parses the TOML subset used by run configs: [dotted.tables], key = value
/// with strings, integers, floats, booleans and single-line arrays.
nlohmann::json parse_toml(const std::string& text);

struct ProviderSettings {
    ProviderConfig provider;
    // Mock scripting; ignored for live providers.
    std::optional<double> simulate_accuracy;
    std::uint64_t simulate_salt = 1;
    double shot_bonus = 0.0;
    bool scripted_rules = false;
    std::filesystem::path mock_rules;
};

struct ServerSettings {
    std::string host = "127.0.0.1";
    int port = 8765;
    /// Optional shared bearer token.
    std::string token;
};

struct RunConfig {
    LabelSchema schema;
    std::string task_description;
    std::filesystem::path corpus_path;
    std::filesystem::path run_dir;

    ProviderSettings annotator_a;
    ProviderSettings annotator_b;
    ProviderSettings judge;
    ProviderSettings embedder;

    ReducerSpec reducer;
    std::filesystem::path external_reduced;
    std::size_t pool_size = kDefaultPoolSize;
    std::uint64_t pool_seed = 0;
    std::size_t kmeans_max_iters = 300;
    MmrConfig mmr;
    /// Retrieval on reduced vectors unless false.
    bool retrieval_on_reduced = true;
    std::size_t batch_size = 50;
    std::size_t workers = 4;

    std::filesystem::path price_sheet;
    bool auto_label_from_gold = false;
    bool auto_approve_prompt = false;
    /// Timestamp used for every recorded event; makes runs byte-reproducible.
    std::string fixed_clock;
    ServerSettings server;

    /// sha256 over the parsed settings that affect results.
    std::string config_hash;

    void validate() const;
    AnnotationOptions annotation_options() const;
};

/// Relative paths resolve against `base_dir`. Each override is
/// "dotted.key=value" with a TOML value, e.g. "pool.size=40".
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace annotkit
