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

#include "annotkit/run_store.hpp"

#include <unordered_map>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kStageNames[] = {
    "none",           "ingested",         "embedded",        "reduced",
    "pool_selected",  "pool_labeled",     "prompt_generated", "prompt_approved",
    "coarse_done",    "consensus_done",   "finalized",
};

json usage_json(const UsageTotals& t) {
    return {{"calls", t.calls}, {"input_tokens", t.input_tokens}, {"output_tokens", t.output_tokens}};
}

UsageTotals usage_from(const json& j) {
    return {j.at("calls").get<std::size_t>(), j.at("input_tokens").get<std::size_t>(),
            j.at("output_tokens").get<std::size_t>()};
}

template <typename Record, typename Parse>
std::vector<Record> load_jsonl(const fs::path& path, Parse parse) {
    std::vector<Record> out;
    if (!fs::exists(path)) {
        return out;
    }
    std::size_t line_no = 0;
    for (const auto& line : read_complete_lines(path)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(parse(json::parse(line)));
        } catch (const json::exception& e) {
            fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

/// Keeps the last record per id, in order of first appearance.
template <typename Record>
std::vector<Record> last_per_id(std::vector<Record> records) {
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<Record> out;
    for (auto& r : records) {
        auto it = slot.find(r.record_id);
        if (it == slot.end()) {
            slot.emplace(r.record_id, out.size());
            out.push_back(std::move(r));
        } else {
            out[it->second] = std::move(r);
        }
    }
    return out;
}

template <typename Record>
std::string to_jsonl(const std::vector<Record>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump() + "\n";
    }
    return out;
}

}  // namespace

std::string to_string(Stage stage) {
    return kStageNames[static_cast<int>(stage)];
}

Stage stage_from_string(const std::string& text) {
    for (int i = 0; i <= static_cast<int>(Stage::finalized); ++i) {
        if (text == kStageNames[i]) {
            return static_cast<Stage>(i);
        }
    }
    fail(ErrorCode::ParseError, "unknown stage '" + text + "'");
}

Stage next_stage(Stage stage) {
    require(stage != Stage::finalized, "no stage after finalized");
    return static_cast<Stage>(static_cast<int>(stage) + 1);
}

bool is_human_gated(Stage stage) {
    return stage == Stage::pool_labeled || stage == Stage::prompt_approved ||
           stage == Stage::finalized;
}

json to_json(const RunState& s) {
    json by_tag = json::object();
    for (const auto& [tag, t] : s.usage_by_tag) {
        by_tag[tag] = usage_json(t);
    }
    return {{"stage", to_string(s.stage)},
            {"timestamps", s.timestamps},
            {"usage", usage_json(s.usage)},
            {"usage_by_tag", by_tag},
            {"pending_gate", s.pending_gate},
            {"pending_action", s.pending_action}};
}

RunState run_state_from_json(const json& j) {
    RunState s;
    s.stage = stage_from_string(j.at("stage").get<std::string>());
    s.timestamps = j.at("timestamps").get<std::map<std::string, std::string>>();
    s.usage = usage_from(j.at("usage"));
    for (const auto& [tag, t] : j.at("usage_by_tag").items()) {
        s.usage_by_tag[tag] = usage_from(t);
    }
    s.pending_gate = j.value("pending_gate", "");
    s.pending_action = j.value("pending_action", "");
    return s;
}

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

bool RunStore::exists(const std::string& name) const {
    return fs::exists(dir_ / name);
}

RunState RunStore::load_state() const {
    if (!exists("state.json")) {
        return {};
    }
    try {
        return run_state_from_json(json::parse(read_file(path("state.json"))));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, "state.json: " + std::string(e.what()));
    }
}

void RunStore::save_state(const RunState& state) const {
    write_file_atomic(path("state.json"), to_json(state).dump(2) + "\n");
}

std::optional<ExemplarPool> RunStore::load_pool() const {
    if (!exists("pool.json")) {
        return std::nullopt;
    }
    try {
        return pool_from_json(json::parse(read_file(path("pool.json"))));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, "pool.json: " + std::string(e.what()));
    }
}

void RunStore::save_pool(const ExemplarPool& pool) const {
    write_file_atomic(path("pool.json"), to_json(pool).dump(2) + "\n");
}

std::vector<TraceEntry> RunStore::load_map_trace() const {
    return load_jsonl<TraceEntry>(path("map_trace.jsonl"), [](const json& j) {
        return TraceEntry{j.at("record_id").get<std::string>(), j.at("label").get<std::string>(),
                          j.at("rationale").get<std::string>()};
    });
}

void RunStore::append_map_trace(const TraceEntry& e) const {
    json j = {{"record_id", e.record_id}, {"label", e.label}, {"rationale", e.rationale}};
    append_file(path("map_trace.jsonl"), j.dump() + "\n");
}

std::optional<EnhancedPrompt> RunStore::load_prompt() const {
    if (!exists("prompt.txt")) {
        return std::nullopt;
    }
    return parse_prompt(read_file(path("prompt.txt")));
}

void RunStore::save_prompt(const EnhancedPrompt& prompt) const {
    write_file_atomic(path("prompt.txt"), serialize_prompt(prompt));
}

std::vector<AnnotationRecord> RunStore::load_annotations() const {
    return last_per_id(load_jsonl<AnnotationRecord>(path("annotations.jsonl"), annotation_from_json));
}

void RunStore::append_annotations(const std::vector<AnnotationRecord>& records) const {
    append_file(path("annotations.jsonl"), to_jsonl(records));
}

void RunStore::save_annotations(const std::vector<AnnotationRecord>& records) const {
    write_file_atomic(path("annotations.jsonl"), to_jsonl(records));
}

std::vector<MismatchRecord> RunStore::load_mismatches() const {
    return last_per_id(load_jsonl<MismatchRecord>(path("mismatches.jsonl"), mismatch_from_json));
}

void RunStore::append_mismatches(const std::vector<MismatchRecord>& records) const {
    append_file(path("mismatches.jsonl"), to_jsonl(records));
}

void RunStore::save_mismatches(const std::vector<MismatchRecord>& records) const {
    write_file_atomic(path("mismatches.jsonl"), to_jsonl(records));
}

std::vector<OverrideEvent> RunStore::load_override_events() const {
    return load_jsonl<OverrideEvent>(path("overrides.jsonl"), [](const json& j) {
        return OverrideEvent{j.at("record_id").get<std::string>(), j.at("label").get<std::string>(),
                             j.at("actor").get<std::string>(), j.at("timestamp").get<std::string>()};
    });
}

std::map<std::string, std::string> RunStore::load_overrides() const {
    std::map<std::string, std::string> out;
    for (const auto& e : load_override_events()) {
        out[e.record_id] = e.label;
    }
    return out;
}

void RunStore::append_override(const OverrideEvent& e) const {
    nlohmann::ordered_json j;
    j["record_id"] = e.record_id;
    j["label"] = e.label;
    j["actor"] = e.actor;
    j["timestamp"] = e.timestamp;
    append_file(path("overrides.jsonl"), j.dump() + "\n");
}

std::vector<UsageEntry> RunStore::load_ledger() const {
    return load_jsonl<UsageEntry>(path("ledger.jsonl"), usage_entry_from_json);
}

void RunStore::append_ledger(const std::vector<UsageEntry>& entries) const {
    std::string out;
    for (const auto& e : entries) {
        out += to_json(e).dump() + "\n";
    }
    if (!out.empty()) {
        append_file(path("ledger.jsonl"), out);
    }
}

void RunStore::write_text(const std::string& name, const std::string& content) const {
    write_file_atomic(path(name), content);
}

std::optional<std::string> RunStore::read_text(const std::string& name) const {
    if (!exists(name)) {
        return std::nullopt;
    }
    return read_file(path(name));
}

std::string RunStore::artifact_digest(const std::string& name) const {
    if (!exists(name)) {
        return {};
    }
    return sha256_hex(read_file(path(name)));
}

}  // namespace annotkit
