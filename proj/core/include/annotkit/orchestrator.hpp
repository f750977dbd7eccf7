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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "annotkit/annotation.hpp"
#include "annotkit/config.hpp"
#include "annotkit/corpus_store.hpp"
#include "annotkit/metrics.hpp"
#include "annotkit/run_store.hpp"

namespace annotkit {

/// Builds the backend for a provider role ("annotator_a", "annotator_b",
/// "judge", "embedder"). The corpus is available for scripted mocks.
using BackendFactory = std::function<std::shared_ptr<Backend>(
    const ProviderSettings& settings, const std::string& role, const Corpus* corpus)>;

/// Mock roles get simulated/scripted handlers as configured; live roles
/// get the HTTP backend.
std::shared_ptr<Backend> default_backend(const ProviderSettings& settings, const std::string& role,
                                         const Corpus* corpus);

/// Called after every durable checkpoint with its name.
using CheckpointHook = std::function<void(const std::string& checkpoint)>;

class Orchestrator {
public:
    explicit Orchestrator(RunConfig config, BackendFactory factory = default_backend);
    ~Orchestrator();
    Orchestrator(const Orchestrator&) = delete;
    Orchestrator& operator=(const Orchestrator&) = delete;

    const RunConfig& config() const { return config_; }
    const RunStore& store() const { return store_; }
    RunState state() const;

    void set_checkpoint_hook(CheckpointHook hook) { hook_ = std::move(hook); }
    void set_sleeper(Gateway::Sleeper sleeper);

    /// Executes the missing stages up to `target`. Throws HumanGatePending
    /// at a gate, or Error(StageError) tagged with the failing stage.
    RunState run_stage(Stage target);

    // Human actions. Each takes an explicit actor.
    void label_pool_item(const std::string& record_id, const std::string& label,
                         const std::string& actor);
    std::size_t import_pool_labels(const std::string& csv, const std::string& actor);
    void seal_pool(const std::string& actor);
    void edit_prompt_rule(const std::string& class_name, const std::string& text,
                          const std::string& actor, std::optional<int> expected_version = {});
    void add_prompt_correction(const std::string& text, const std::string& actor,
                               std::optional<int> expected_version = {});
    void approve_prompt(const std::string& actor, std::optional<int> expected_version = {});
    void override_mismatch(const std::string& record_id, const std::string& label,
                           const std::string& actor);

    // Read access.
    const Corpus& corpus();
    std::optional<ExemplarPool> pool() const { return store_.load_pool(); }
    std::optional<EnhancedPrompt> prompt() const { return store_.load_prompt(); }
    std::vector<AnnotationRecord> annotations() const { return store_.load_annotations(); }
    std::vector<MismatchRecord> mismatches() const { return store_.load_mismatches(); }
    std::optional<nlohmann::json> report() const;
    /// MMR shots the annotators see for a record.
    std::vector<Shot> shots_for(const std::string& record_id);
    std::string export_pool_csv();

private:
    void ensure_corpus();
    void ensure_gateways();
    Gateway& gateway(const std::string& role);
    const EmbeddingMatrix& retrieval_matrix();
    std::string now() const;
    void checkpoint(const std::string& name);
    void advance_to(Stage stage);
    void require_stage_at_least(Stage stage, const std::string& action) const;

    void do_ingest();
    void do_embed();
    void do_reduce();
    void do_select_pool();
    void do_gate_pool();
    void do_generate_prompt();
    void do_gate_prompt();
    void do_coarse();
    void do_consensus();
    void do_finalize();
    nlohmann::json build_report(const FinalizeResult& result);
    void write_manifest();

    RunConfig config_;
    BackendFactory factory_;
    RunStore store_;
    std::unique_ptr<RunLock> lock_;
    CheckpointHook hook_;
    Gateway::Sleeper sleeper_;
    std::shared_ptr<UsageLedger> ledger_;
    std::unique_ptr<Corpus> corpus_;
    std::map<std::string, std::unique_ptr<Gateway>> gateways_;
};

struct SweepRow {
    std::size_t M = 0;
    std::optional<PrfReport> report;
    std::string error;
};

/// Evaluation harness: per M, a gold-labelled pool and auto-approved prompt,
/// then annotator A's coarse labels scored against gold. Cells that fail
/// carry their error; the rest of the table is still produced.
std::vector<SweepRow> sweep_exemplars(const RunConfig& config, const std::vector<std::size_t>& M_values,
                                      BackendFactory factory = default_backend);

/// Rows: M then per-class F1 (percent), macro F1, accuracy.
std::string format_sweep_table(const std::vector<SweepRow>& rows,
                               const std::vector<std::string>& classes);
nlohmann::json to_json(const std::vector<SweepRow>& rows);

/// Summary and per-class tables of a report.json document.
std::string format_report_text(const nlohmann::json& report);

/// Scores one labeling against gold over the ids in `ids` with gold labels.
PrfReport score_against_gold(const Corpus& corpus, const Labeling& labels,
                             const std::vector<std::string>& ids);

}  // namespace annotkit
