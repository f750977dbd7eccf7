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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "annotkit/corpus_store.hpp"
#include "annotkit/llm_gateway.hpp"

namespace annotkit {

/// Ground truth the scripted providers consult: query text → true label.
struct TruthTable {
    std::vector<std::string> classes;
    std::map<std::string, std::string> label_by_text;
    std::string open_delimiter = "<";
    std::string close_delimiter = ">";

    /// Record text of the query embedded in a classify or judge prompt.
    std::optional<std::string> record_text(const std::string& user_text) const;
    /// Its true label.
    std::optional<std::string> lookup(const std::string& user_text) const;
};

TruthTable truth_from_gold(const Corpus& corpus);

/// Draws are keyed on the record text, so a simulated model gives a record
/// the same answer in plain and CoT prompts.
struct SimulatedAnnotatorSpec {
    double accuracy = 0.8;
    /// Distinct salts give independent errors.
    std::uint64_t salt = 1;
    /// Added to accuracy, scaled by the share of shots whose label equals
    /// the query's true label.
    double shot_bonus = 0.0;
};

/// Classify prompts answered correctly with the configured probability; the
/// draw depends only on (seed, salt, query text), so the plain and CoT
/// passes agree with each other. Non-classify prompts are declined.
MockHandler simulated_annotator(std::shared_ptr<const TruthTable> truth, SimulatedAnnotatorSpec spec);

/// Judge prompts: the true label with probability `accuracy`, else the
/// wrong candidate's label (or another class).
MockHandler simulated_judge(std::shared_ptr<const TruthTable> truth, double accuracy,
                            std::uint64_t salt);

/// Canned map rationales and reduce summaries that mention the class.
MockHandler scripted_rule_writer();

struct SyntheticCorpusSpec {
    std::size_t records = 200;
    std::vector<std::string> classes = {"approve", "oppose"};
    std::uint64_t seed = 7;
    std::size_t words_per_text = 12;
    /// Share of words drawn from the class vocabulary rather than the shared one.
    double topical_share = 0.6;
};

/// Texts built from per-class vocabularies so embeddings cluster by class.
std::vector<TextRecord> synthetic_records(const SyntheticCorpusSpec& spec);

/// JSONL with record_id, text and gold_label.
std::string synthetic_jsonl(const std::vector<TextRecord>& records);

}  // namespace annotkit
