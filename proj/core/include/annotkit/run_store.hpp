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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "annotkit/annotation.hpp"
#include "annotkit/exemplar_pool.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/prompting.hpp"

namespace annotkit {

enum class Stage {
    none,
    ingested,
    embedded,
    reduced,
    pool_selected,
    pool_labeled,
    prompt_generated,
    prompt_approved,
    coarse_done,
    consensus_done,
    finalized,
};

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& text);
Stage next_stage(Stage stage);
/// Transitions into these stages need a human action.
bool is_human_gated(Stage stage);

struct RunState {
    Stage stage = Stage::none;
    std::map<std::string, std::string> timestamps;
    UsageTotals usage;
    std::map<std::string, UsageTotals> usage_by_tag;
    /// Set when the last run_stage stopped at a human gate.
    std::string pending_gate;
    std::string pending_action;
};

nlohmann::json to_json(const RunState& state);
RunState run_state_from_json(const nlohmann::json& j);

struct OverrideEvent {
    std::string record_id;
    std::string label;
    std::string actor;
    std::string timestamp;
};

/// File layout of one run directory. Every write is atomic or an appended
/// complete line, so a crash leaves the last checkpoint readable.
class RunStore {
public:
    explicit RunStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }
    bool exists(const std::string& name) const;

    RunState load_state() const;
    void save_state(const RunState& state) const;

    std::optional<ExemplarPool> load_pool() const;
    void save_pool(const ExemplarPool& pool) const;

    std::vector<TraceEntry> load_map_trace() const;
    void append_map_trace(const TraceEntry& entry) const;

    std::optional<EnhancedPrompt> load_prompt() const;
    void save_prompt(const EnhancedPrompt& prompt) const;

    /// Later lines for an id replace earlier ones.
    std::vector<AnnotationRecord> load_annotations() const;
    void append_annotations(const std::vector<AnnotationRecord>& records) const;
    void save_annotations(const std::vector<AnnotationRecord>& records) const;

    std::vector<MismatchRecord> load_mismatches() const;
    void append_mismatches(const std::vector<MismatchRecord>& records) const;
    void save_mismatches(const std::vector<MismatchRecord>& records) const;

    std::vector<OverrideEvent> load_override_events() const;
    /// Latest override per id.
    std::map<std::string, std::string> load_overrides() const;
    void append_override(const OverrideEvent& event) const;

    std::vector<UsageEntry> load_ledger() const;
    void append_ledger(const std::vector<UsageEntry>& entries) const;

    void write_text(const std::string& name, const std::string& content) const;
    std::optional<std::string> read_text(const std::string& name) const;

    /// sha256 of an artifact's bytes; empty if it does not exist.
    std::string artifact_digest(const std::string& name) const;

private:
    std::filesystem::path dir_;
};

}  // namespace annotkit
