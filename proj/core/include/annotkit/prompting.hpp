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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "annotkit/corpus_store.hpp"
#include "annotkit/exemplar_pool.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/retrieval.hpp"

namespace annotkit {

struct PromptTemplate {
    std::string task_name;
    std::string initial_description;
    /// Delimiter instruction appended to every classification prompt.
    std::string output_contract;
    std::vector<std::string> class_names;
    std::string open_delimiter = "<";
    std::string close_delimiter = ">";

    /// Template whose contract lists the schema's classes as options.
    static PromptTemplate from_schema(const LabelSchema& schema, std::string description);
    void validate() const;
};

/// `Please choose your answer only from the N options -- ...` contract text.
std::string default_output_contract(const LabelSchema& schema);

struct TraceEntry {
    std::string record_id;
    std::string label;
    std::string rationale;

    bool operator==(const TraceEntry&) const = default;
};

struct PromptEdit {
    int version = 0;
    std::string actor;
    /// "rule:<class>", "correction" or "description".
    std::string target;
    std::string diff;
    std::string timestamp;
};

struct EnhancedPrompt {
    PromptTemplate base;
    std::map<std::string, std::string> per_class_rules;
    /// Human instructions countering wrong generated rules; rendered after rules.
    std::vector<std::string> corrections;
    std::vector<TraceEntry> generation_trace;
    std::vector<PromptEdit> human_edits;
    bool approved = false;
    std::string approved_by;
    /// Bumped on every edit; approval checks it to catch stale reviews.
    int version = 1;

    std::vector<std::string> classes_missing_rules() const;
    /// sha256 over description, rules and corrections.
    std::string content_hash() const;
};

// --- map / reduce -----------------------------------------------------------

ChatRequest map_request(const PromptTemplate& base, const std::string& text, const std::string& label);
ChatRequest reduce_request(const PromptTemplate& base, const std::string& class_name,
                           const std::vector<std::string>& rationales);

/// One call per exemplar, in pool order. `resume` holds entries already done
/// (a prefix of pool order); `on_item` sees each new entry as soon as it
/// exists, so a failure mid-way leaves a resumable checkpoint.
std::vector<TraceEntry> map_rationales(const ExemplarPool& pool, const Corpus& corpus,
                                       const PromptTemplate& base, Gateway& gateway,
                                       std::vector<TraceEntry> resume = {},
                                       const std::function<void(const TraceEntry&)>& on_item = {});

struct ReduceResult {
    std::map<std::string, std::string> rules;
    /// Classes with no rationales or a blank summary, for human attention.
    std::vector<std::string> empty_rule_classes;
};

/// One call per class that has rationales. Blank outputs are flagged, not retried.
ReduceResult reduce_rules(const std::vector<TraceEntry>& rationales, const PromptTemplate& base,
                          Gateway& gateway);

EnhancedPrompt make_enhanced_prompt(PromptTemplate base, std::vector<TraceEntry> trace,
                                    const ReduceResult& reduced);

// --- human verification -------------------------------------------------------

void edit_rule(EnhancedPrompt& prompt, const std::string& class_name, const std::string& text,
               const std::string& actor, std::string timestamp = {});
void add_correction(EnhancedPrompt& prompt, const std::string& text, const std::string& actor,
                    std::string timestamp = {});
/// Throws EmptyRule when a class lacks rules, VersionConflict when
/// `expected_version` is given and stale.
void approve(EnhancedPrompt& prompt, const std::string& actor,
             std::optional<int> expected_version = std::nullopt);

/// Minimal line diff ("-old" / "+new" lines, common lines with two spaces).
std::string line_diff(const std::string& before, const std::string& after);

// --- assembly / parsing -------------------------------------------------------

enum class PromptMode { plain, cot, judge };

struct JudgeCandidates {
    std::string response_1;
    std::string response_2;
};

/// Byte-stable prompt: description, rules, corrections, Example blocks,
/// query, then the output contract (cot adds a step-by-step instruction
/// before it; judge embeds both responses).
ChatRequest assemble(const EnhancedPrompt& prompt, const std::vector<Shot>& shots,
                     const std::string& query_text, PromptMode mode,
                     const std::optional<JudgeCandidates>& candidates = std::nullopt);

enum class ParsePath { delimited, fallback_scan, failed };

std::string to_string(ParsePath path);
ParsePath parse_path_from_string(const std::string& text);

struct ParsedLabel {
    std::string label;
    std::string raw;
    ParsePath parse_path = ParsePath::failed;

    bool ok() const { return parse_path != ParsePath::failed; }
    bool operator==(const ParsedLabel&) const = default;
};

/// Last delimited token that names a class wins; otherwise a unique class
/// name on the final non-empty line; otherwise failed.
ParsedLabel parse_label(const std::string& text, const LabelSchema& schema);

/// Which kind of request a user_text is (used by scripted mocks).
enum class PromptKind { map, reduce, classify, judge, unknown };
PromptKind classify_prompt(const std::string& user_text);

/// Offsets just past the final "Text: " marker of a classify/judge prompt;
/// everything from there on starts with the query text.
std::optional<std::string> query_section(const std::string& user_text);

/// Labels of the Example blocks in a classify prompt, in order.
std::vector<std::string> shot_answers(const std::string& user_text);

/// Response 1 / Response 2 bodies of a judge prompt.
std::optional<JudgeCandidates> judge_candidates(const std::string& user_text);

// --- persistence --------------------------------------------------------------

/// Human-readable sectioned text with full edit history.
std::string serialize_prompt(const EnhancedPrompt& prompt);
EnhancedPrompt parse_prompt(const std::string& text);

nlohmann::json to_json(const EnhancedPrompt& prompt);

}  // namespace annotkit
