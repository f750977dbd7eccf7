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

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "annotkit/corpus_store.hpp"
#include "annotkit/exemplar_pool.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/prompting.hpp"
#include "annotkit/retrieval.hpp"

namespace annotkit {

struct AnnotationRecord {
    std::string record_id;
    ParsedLabel label_a;
    ParsedLabel label_b;
    bool agreed = false;
    std::string provider_a;
    std::string provider_b;
    std::vector<std::string> shots_used;
    std::string prompt_hash;

    bool operator==(const AnnotationRecord&) const = default;
};

struct CotResult {
    std::string reasoning;
    ParsedLabel label;

    bool operator==(const CotResult&) const = default;
};

enum class ChosenResponse { r1, r2, neither };
/// `pending`: the judge answered neither or unparseably; a human must decide.
enum class Resolution { judge, human_override, pending };

std::string to_string(ChosenResponse chosen);
std::string to_string(Resolution resolution);
ChosenResponse chosen_response_from_string(const std::string& text);
Resolution resolution_from_string(const std::string& text);

struct JudgeResult {
    std::string reasoning;
    /// The judge's own label; may be set even when chosen == neither.
    ParsedLabel verdict;
    ChosenResponse chosen = ChosenResponse::neither;

    bool operator==(const JudgeResult&) const = default;
};

struct MismatchRecord {
    std::string record_id;
    CotResult cot_a;
    CotResult cot_b;
    JudgeResult judge;
    std::optional<std::string> final_label;
    Resolution resolution = Resolution::pending;

    bool operator==(const MismatchRecord&) const = default;
};

enum class Provenance { agreement, consensus, human };

std::string to_string(Provenance provenance);
Provenance provenance_from_string(const std::string& text);

struct FinalEntry {
    std::string label;
    Provenance provenance = Provenance::agreement;

    bool operator==(const FinalEntry&) const = default;
};

using FinalLabeling = std::map<std::string, FinalEntry>;

struct AnnotationOptions {
    MmrConfig mmr;
    std::size_t batch_size = 50;
    /// Records annotated concurrently; the gateways still cap in-flight calls.
    std::size_t workers = 4;
};

/// Labels every corpus record outside the pool with both annotators.
/// `done` holds records finished by an earlier, interrupted call; they are
/// skipped and returned as-is. `on_batch` receives each completed batch
/// before the next starts. Result is in corpus order.
std::vector<AnnotationRecord> coarse_annotate(
    const Corpus& corpus, const EnhancedPrompt& prompt, const ExemplarPool& pool,
    const EmbeddingMatrix& matrix, Gateway& annotator_a, Gateway& annotator_b,
    const AnnotationOptions& options, const std::vector<AnnotationRecord>& done = {},
    const std::function<void(const std::vector<AnnotationRecord>&)>& on_batch = {});

std::vector<std::string> mismatch_ids(const std::vector<AnnotationRecord>& annotations);

/// Maps a judge transcript to a verdict, given the two CoT labels.
JudgeResult interpret_judge(const std::string& transcript, const CotResult& cot_a,
                            const CotResult& cot_b, const LabelSchema& schema);

/// Three calls per id: CoT to each annotator, then the judge.
std::vector<MismatchRecord> consensus_resolve(
    const std::vector<std::string>& mismatches, const Corpus& corpus, const EnhancedPrompt& prompt,
    const ExemplarPool& pool, const EmbeddingMatrix& matrix, Gateway& annotator_a,
    Gateway& annotator_b, Gateway& judge, const AnnotationOptions& options,
    const std::vector<MismatchRecord>& done = {},
    const std::function<void(const std::vector<MismatchRecord>&)>& on_batch = {});

struct FlaggedItem {
    std::string record_id;
    std::string human_label;
    std::string judge_label;
    std::string judge_reasoning;

    bool operator==(const FlaggedItem&) const = default;
};

struct FinalizeResult {
    FinalLabeling labeling;
    /// Judge verdicts that contradict the record's human (else gold) label.
    std::vector<FlaggedItem> flagged;
};

/// Pool members keep their human labels. Throws UnresolvedMismatch naming
/// every mismatch that has neither a judge resolution nor an override.
FinalizeResult finalize(const Corpus& corpus, const ExemplarPool& pool,
                        const std::vector<AnnotationRecord>& annotations,
                        const std::vector<MismatchRecord>& mismatches,
                        const std::map<std::string, std::string>& overrides);

std::string flagged_csv(const std::vector<FlaggedItem>& flagged);

nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MismatchRecord& record);
MismatchRecord mismatch_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FinalLabeling& labeling);

/// One JSON object per line, in map order.
std::string final_labeling_jsonl(const FinalLabeling& labeling);
FinalLabeling final_labeling_from_jsonl(const std::string& text);

}  // namespace annotkit
