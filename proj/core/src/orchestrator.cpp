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

#include "annotkit/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "annotkit/errors.hpp"
#include "annotkit/geometry.hpp"
#include "annotkit/simulation.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kRoles[] = {"annotator_a", "annotator_b", "judge", "embedder"};
constexpr std::size_t kEmbedBatch = 128;
constexpr const char* kAutoActor = "auto";

const ProviderSettings& settings_for(const RunConfig& c, const std::string& role) {
    if (role == "annotator_a") return c.annotator_a;
    if (role == "annotator_b") return c.annotator_b;
    if (role == "judge") return c.judge;
    return c.embedder;
}

void add_usage(UsageTotals& t, const UsageEntry& e) {
    ++t.calls;
    t.input_tokens += e.input_tokens;
    t.output_tokens += e.output_tokens;
}

json usage_json(const UsageTotals& t) {
    return {{"calls", t.calls}, {"input_tokens", t.input_tokens}, {"output_tokens", t.output_tokens}};
}

void require_actor(const std::string& actor) {
    require(!trim(actor).empty(), "human actions need an actor identity");
}

}  // namespace

std::shared_ptr<Backend> default_backend(const ProviderSettings& settings, const std::string& role,
                                         const Corpus* corpus) {
    const auto& p = settings.provider;
    if (!p.is_mock()) {
        return make_backend(p);
    }
    auto mock = std::make_shared<MockBackend>(p);
    if (!settings.mock_rules.empty()) {
        mock->load_rules(settings.mock_rules);
    }
    if (settings.scripted_rules) {
        mock->add_handler(scripted_rule_writer());
    }
    if (settings.simulate_accuracy && corpus != nullptr) {
        auto truth = std::make_shared<const TruthTable>(truth_from_gold(*corpus));
        if (role == "judge") {
            mock->add_handler(simulated_judge(truth, *settings.simulate_accuracy, settings.simulate_salt));
        } else {
            mock->add_handler(simulated_annotator(
                truth, {*settings.simulate_accuracy, settings.simulate_salt, settings.shot_bonus}));
        }
    }
    return mock;
}

Orchestrator::Orchestrator(RunConfig config, BackendFactory factory)
    : config_(std::move(config)),
      factory_(std::move(factory)),
      store_(config_.run_dir),
      ledger_(std::make_shared<UsageLedger>()) {
    config_.validate();
    lock_ = std::make_unique<RunLock>(config_.run_dir);
}

Orchestrator::~Orchestrator() = default;

RunState Orchestrator::state() const {
    return store_.load_state();
}

void Orchestrator::set_sleeper(Gateway::Sleeper sleeper) {
    sleeper_ = std::move(sleeper);
    for (auto& [role, gw] : gateways_) {
        gw->set_sleeper(sleeper_);
    }
}

std::string Orchestrator::now() const {
    return config_.fixed_clock.empty() ? utc_timestamp() : config_.fixed_clock;
}

void Orchestrator::checkpoint(const std::string& name) {
    auto entries = ledger_->drain();
    // Concurrent calls land in completion order; sort for stable files.
    std::sort(entries.begin(), entries.end(), [](const UsageEntry& a, const UsageEntry& b) {
        return std::tie(a.tag, a.provider_id, a.model_name, a.input_tokens, a.output_tokens) <
               std::tie(b.tag, b.provider_id, b.model_name, b.input_tokens, b.output_tokens);
    });
    store_.append_ledger(entries);
    auto s = state();
    for (const auto& e : entries) {
        add_usage(s.usage, e);
        add_usage(s.usage_by_tag[e.tag], e);
    }
    store_.save_state(s);
    if (hook_) {
        hook_(name);
    }
}

void Orchestrator::advance_to(Stage stage) {
    auto s = state();
    require(static_cast<int>(stage) == static_cast<int>(s.stage) + 1,
            "stage " + to_string(stage) + " does not follow " + to_string(s.stage));
    s.stage = stage;
    s.timestamps[to_string(stage)] = now();
    s.pending_gate.clear();
    s.pending_action.clear();
    store_.save_state(s);
    write_manifest();
    checkpoint("stage:" + to_string(stage));
}

void Orchestrator::require_stage_at_least(Stage stage, const std::string& action) const {
    auto s = state();
    if (s.stage < stage) {
        fail(ErrorCode::StageError, action + " needs stage " + to_string(stage) + ", run is at " +
                                        to_string(s.stage));
    }
}

void Orchestrator::ensure_corpus() {
    if (corpus_) {
        return;
    }
    if (state().stage < Stage::ingested) {
        fail(ErrorCode::StageError, "corpus not ingested yet");
    }
    corpus_ = std::make_unique<Corpus>(load_corpus(config_.run_dir, config_.schema));
}

const Corpus& Orchestrator::corpus() {
    ensure_corpus();
    return *corpus_;
}

void Orchestrator::ensure_gateways() {
    if (!gateways_.empty()) {
        return;
    }
    for (const char* role : kRoles) {
        const auto& s = settings_for(config_, role);
        auto backend = factory_(s, role, corpus_.get());
        auto gw = std::make_unique<Gateway>(s.provider, std::move(backend), ledger_);
        if (sleeper_) {
            gw->set_sleeper(sleeper_);
        }
        gateways_[role] = std::move(gw);
    }
}

Gateway& Orchestrator::gateway(const std::string& role) {
    ensure_gateways();
    return *gateways_.at(role);
}

const EmbeddingMatrix& Orchestrator::retrieval_matrix() {
    ensure_corpus();
    return corpus_->embeddings(config_.embedder.provider.model_name, config_.retrieval_on_reduced);
}

RunState Orchestrator::run_stage(Stage target) {
    auto s = state();
    while (s.stage < target) {
        Stage next = next_stage(s.stage);
        try {
            switch (next) {
                case Stage::ingested: do_ingest(); break;
                case Stage::embedded: do_embed(); break;
                case Stage::reduced: do_reduce(); break;
                case Stage::pool_selected: do_select_pool(); break;
                case Stage::pool_labeled: do_gate_pool(); break;
                case Stage::prompt_generated: do_generate_prompt(); break;
                case Stage::prompt_approved: do_gate_prompt(); break;
                case Stage::coarse_done: do_coarse(); break;
                case Stage::consensus_done: do_consensus(); break;
                case Stage::finalized: do_finalize(); break;
                case Stage::none: break;
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::HumanGatePending) {
                auto pending = state();
                pending.pending_gate = to_string(next);
                pending.pending_action = e.message();
                store_.save_state(pending);
                throw;
            }
            std::string msg = e.message();
            if (msg.rfind("stage ", 0) != 0) {
                msg = "stage " + to_string(next) + ": " + msg;
            }
            throw Error(e.code(), msg);
        }
        s = state();
    }
    return s;
}

// --- stages -------------------------------------------------------------------

void Orchestrator::do_ingest() {
    corpus_ = std::make_unique<Corpus>(ingest(config_.corpus_path, config_.schema));
    gateways_.clear();
    save_corpus(*corpus_, config_.run_dir);
    advance_to(Stage::ingested);
}

void Orchestrator::do_embed() {
    ensure_corpus();
    const auto& model = config_.embedder.provider.model_name;
    if (!corpus_->has_embeddings(model, false)) {
        auto& gw = gateway("embedder");
        const auto& records = corpus_->records();
        EmbeddingMatrix all;
        std::vector<std::vector<double>> rows;
        for (std::size_t begin = 0; begin < records.size(); begin += kEmbedBatch) {
            std::size_t end = std::min(records.size(), begin + kEmbedBatch);
            std::vector<std::string> texts;
            std::vector<std::string> ids;
            for (std::size_t i = begin; i < end; ++i) {
                texts.push_back(records[i].text);
                ids.push_back(records[i].record_id);
            }
            auto part = gw.embed(texts, ids);
            if (all.record_ids.empty()) {
                all.model_name = part.model_name;
                all.vectors.resize(static_cast<Eigen::Index>(records.size()), part.vectors.cols());
            }
            require(part.vectors.cols() == all.vectors.cols(), "embedding width changed between batches");
            all.vectors.middleRows(static_cast<Eigen::Index>(begin), part.vectors.rows()) = part.vectors;
            all.record_ids.insert(all.record_ids.end(), part.record_ids.begin(), part.record_ids.end());
        }
        all.model_name = model;
        corpus_->attach_embeddings(std::move(all));
        save_corpus(*corpus_, config_.run_dir);
    }
    advance_to(Stage::embedded);
}

void Orchestrator::do_reduce() {
    ensure_corpus();
    const auto& model = config_.embedder.provider.model_name;
    if (!corpus_->has_embeddings(model, true)) {
        const auto& raw = corpus_->embeddings(model, false);
        ReductionResult result;
        if (config_.reducer.method == ReducerMethod::external) {
            ExternalReducer reducer(read_matrix_file(config_.external_reduced));
            result = reducer.reduce(raw, config_.reducer);
        } else {
            result = reduce(raw, config_.reducer);
        }
        nlohmann::ordered_json info;
        info["method"] = config_.reducer.method == ReducerMethod::pca ? "pca" : "external";
        info["target_dimension"] = config_.reducer.target_dimension;
        info["kept_dimension"] = result.matrix.dimension();
        info["explained_variance"] = result.explained_variance;
        info["rank_deficient"] = result.rank_deficient;
        info["warning"] = result.warning;
        corpus_->attach_embeddings(std::move(result.matrix));
        save_corpus(*corpus_, config_.run_dir);
        store_.write_text("reduction.json", info.dump(2) + "\n");
    }
    advance_to(Stage::reduced);
}

void Orchestrator::do_select_pool() {
    ensure_corpus();
    const auto& reduced = corpus_->embeddings(config_.embedder.provider.model_name, true);
    auto pool = select_pool(reduced, config_.pool_size, config_.pool_seed, config_.kmeans_max_iters);
    store_.save_pool(pool);
    advance_to(Stage::pool_selected);
}

void Orchestrator::do_gate_pool() {
    auto pool = *store_.load_pool();
    if (pool.status != PoolStatus::verified && config_.auto_label_from_gold) {
        ensure_corpus();
        for (const auto& id : pool.pool_ids) {
            if (pool.labeled.count(id)) {
                continue;
            }
            const auto& gold = corpus_->record(id).gold_label;
            if (!gold) {
                fail(ErrorCode::HumanGatePending,
                     "pool_labeled: record '" + id + "' has no gold label to auto-label from");
            }
            record_label(pool, config_.schema, id, *gold, kAutoActor, now());
        }
        annotkit::seal_pool(pool, kAutoActor);
        store_.save_pool(pool);
    }
    if (pool.status != PoolStatus::verified) {
        std::size_t missing = pool.pool_ids.size() - pool.labeled.size();
        fail(ErrorCode::HumanGatePending,
             "pool_labeled: " + std::to_string(missing) + " of " + std::to_string(pool.pool_ids.size()) +
                 " pool items still need labels, then the pool must be sealed");
    }
    advance_to(Stage::pool_labeled);
}

void Orchestrator::do_generate_prompt() {
    ensure_corpus();
    auto pool = *store_.load_pool();
    auto base = PromptTemplate::from_schema(config_.schema, config_.task_description);
    auto& writer = gateway("annotator_a");
    auto trace = map_rationales(pool, *corpus_, base, writer, store_.load_map_trace(),
                                [this](const TraceEntry& e) {
                                    store_.append_map_trace(e);
                                    checkpoint("map:" + e.record_id);
                                });
    auto reduced = reduce_rules(trace, base, writer);
    auto prompt = make_enhanced_prompt(std::move(base), std::move(trace), reduced);
    store_.save_prompt(prompt);
    advance_to(Stage::prompt_generated);
}

void Orchestrator::do_gate_prompt() {
    auto prompt = *store_.load_prompt();
    if (!prompt.approved && config_.auto_approve_prompt) {
        try {
            approve(prompt, kAutoActor);
        } catch (const Error& e) {
            fail(ErrorCode::HumanGatePending, "prompt_approved: " + e.message());
        }
        store_.save_prompt(prompt);
    }
    if (!prompt.approved) {
        auto missing = prompt.classes_missing_rules();
        std::string msg = "prompt_approved: review the generated rules (version " +
                          std::to_string(prompt.version) + ") and approve them";
        if (!missing.empty()) {
            msg += "; classes without rules: ";
            for (std::size_t i = 0; i < missing.size(); ++i) {
                msg += (i ? ", " : "") + missing[i];
            }
        }
        fail(ErrorCode::HumanGatePending, msg);
    }
    advance_to(Stage::prompt_approved);
}

void Orchestrator::do_coarse() {
    ensure_corpus();
    auto pool = *store_.load_pool();
    auto prompt = *store_.load_prompt();
    auto annotations = coarse_annotate(
        *corpus_, prompt, pool, retrieval_matrix(), gateway("annotator_a"), gateway("annotator_b"),
        config_.annotation_options(), store_.load_annotations(),
        [this](const std::vector<AnnotationRecord>& batch) {
            store_.append_annotations(batch);
            checkpoint("coarse:" + batch.front().record_id);
        });
    store_.save_annotations(annotations);
    advance_to(Stage::coarse_done);
}

void Orchestrator::do_consensus() {
    ensure_corpus();
    auto annotations = store_.load_annotations();
    auto ids = mismatch_ids(annotations);
    std::vector<MismatchRecord> resolved;
    if (!ids.empty()) {
        auto pool = *store_.load_pool();
        auto prompt = *store_.load_prompt();
        resolved = consensus_resolve(
            ids, *corpus_, prompt, pool, retrieval_matrix(), gateway("annotator_a"),
            gateway("annotator_b"), gateway("judge"), config_.annotation_options(),
            store_.load_mismatches(), [this](const std::vector<MismatchRecord>& batch) {
                store_.append_mismatches(batch);
                checkpoint("consensus:" + batch.front().record_id);
            });
    }
    store_.save_mismatches(resolved);
    advance_to(Stage::consensus_done);
}

void Orchestrator::do_finalize() {
    ensure_corpus();
    auto pool = *store_.load_pool();
    auto annotations = store_.load_annotations();
    auto mismatches = store_.load_mismatches();
    FinalizeResult result;
    try {
        result = finalize(*corpus_, pool, annotations, mismatches, store_.load_overrides());
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UnresolvedMismatch) {
            throw;
        }
        fail(ErrorCode::HumanGatePending,
             "finalized: override the pending mismatches; " + e.message());
    }
    store_.write_text("final.jsonl", final_labeling_jsonl(result.labeling));
    store_.write_text("flagged.csv", flagged_csv(result.flagged));
    auto report = build_report(result);
    store_.write_text("report.json", report.dump(2) + "\n");
    store_.write_text("report.txt", format_report_text(report));
    advance_to(Stage::finalized);
}

PrfReport score_against_gold(const Corpus& corpus, const Labeling& labels,
                             const std::vector<std::string>& ids) {
    Labeling pred;
    Labeling gold;
    for (const auto& id : ids) {
        const auto& rec = corpus.record(id);
        auto it = labels.find(id);
        if (!rec.gold_label || it == labels.end()) {
            continue;
        }
        pred[id] = it->second;
        gold[id] = *rec.gold_label;
    }
    return prf1(confusion(pred, gold, corpus.schema().classes));
}

json Orchestrator::build_report(const FinalizeResult& result) {
    auto pool = *store_.load_pool();
    auto annotations = store_.load_annotations();
    auto mismatches = store_.load_mismatches();
    auto overrides = store_.load_overrides();

    std::vector<std::string> evaluated;
    std::vector<std::string> agreed_ids;
    Labeling label_a;
    Labeling label_b;
    for (const auto& a : annotations) {
        evaluated.push_back(a.record_id);
        label_a[a.record_id] = a.label_a.label;
        label_b[a.record_id] = a.label_b.label;
        if (a.agreed) {
            agreed_ids.push_back(a.record_id);
        }
    }
    Labeling final_labels;
    std::map<std::string, std::size_t> provenance = {{"agreement", 0}, {"consensus", 0}, {"human", 0}};
    for (const auto& [id, e] : result.labeling) {
        final_labels[id] = e.label;
        ++provenance[to_string(e.provenance)];
    }

    nlohmann::ordered_json r;
    r["task"] = config_.schema.task_name;
    r["records"] = corpus_->size();
    r["pool_size"] = pool.pool_ids.size();
    r["annotated"] = annotations.size();
    r["agreed"] = agreed_ids.size();
    r["mismatches"] = mismatches.size();
    std::size_t judge_resolved = 0;
    for (const auto& m : mismatches) {
        judge_resolved += m.resolution == Resolution::judge ? 1 : 0;
    }
    r["judge_resolved"] = judge_resolved;
    r["human_overrides"] = overrides.size();
    r["flagged"] = result.flagged.size();
    r["provenance"] = provenance;

    bool has_gold = std::any_of(evaluated.begin(), evaluated.end(), [&](const std::string& id) {
        return corpus_->record(id).gold_label.has_value();
    });
    if (has_gold) {
        nlohmann::ordered_json metrics;
        metrics["final"] = to_json(score_against_gold(*corpus_, final_labels, evaluated));
        metrics["annotator_a"] = to_json(score_against_gold(*corpus_, label_a, evaluated));
        metrics["annotator_b"] = to_json(score_against_gold(*corpus_, label_b, evaluated));
        bool agreed_gold = std::any_of(agreed_ids.begin(), agreed_ids.end(), [&](const std::string& id) {
            return corpus_->record(id).gold_label.has_value();
        });
        if (agreed_gold) {
            metrics["agreement_subset"] = to_json(score_against_gold(*corpus_, label_a, agreed_ids));
        }
        r["metrics"] = metrics;
    }

    auto ledger = store_.load_ledger();
    UsageTotals total;
    std::map<std::string, UsageTotals> by_tag;
    std::map<std::string, UsageTotals> by_provider;
    for (const auto& e : ledger) {
        add_usage(total, e);
        add_usage(by_tag[e.tag], e);
        add_usage(by_provider[e.provider_id], e);
    }
    nlohmann::ordered_json usage;
    usage["total"] = usage_json(total);
    json tags = json::object();
    for (const auto& [k, v] : by_tag) tags[k] = usage_json(v);
    json providers = json::object();
    for (const auto& [k, v] : by_provider) providers[k] = usage_json(v);
    usage["by_tag"] = tags;
    usage["by_provider"] = providers;
    r["usage"] = usage;

    if (!config_.price_sheet.empty()) {
        auto sheet = PriceSheet::load(config_.price_sheet);
        double cost = 0.0;
        std::set<std::string> unpriced;
        for (const auto& e : ledger) {
            try {
                cost += estimate_cost(sheet, e.input_tokens, e.output_tokens, e.model_name);
            } catch (const Error&) {
                unpriced.insert(e.model_name);
            }
        }
        r["cost"] = {{"currency", sheet.currency},
                     {"price_sheet_version", sheet.version},
                     {"estimated", cost},
                     {"unpriced_models", unpriced}};
    }
    return json::parse(r.dump());
}

void Orchestrator::write_manifest() {
    ensure_corpus();
    SnapshotExtras extras;
    if (auto pool = store_.load_pool()) {
        extras.pool_ids = pool->pool_ids;
    }
    extras.config_hash = config_.config_hash;
    extras.stage = to_string(state().stage);
    for (const char* name : {"reduction.json", "pool.json", "map_trace.jsonl", "prompt.txt",
                             "annotations.jsonl", "mismatches.jsonl", "overrides.jsonl",
                             "final.jsonl", "flagged.csv", "report.json", "report.txt", "ledger.jsonl"}) {
        auto digest = store_.artifact_digest(name);
        if (!digest.empty()) {
            extras.artifacts[name] = digest;
        }
    }
    snapshot(*corpus_, config_.run_dir, extras);
}

// --- human actions --------------------------------------------------------------

void Orchestrator::label_pool_item(const std::string& record_id, const std::string& label,
                                   const std::string& actor) {
    require_actor(actor);
    require_stage_at_least(Stage::pool_selected, "pool labeling");
    auto pool = *store_.load_pool();
    record_label(pool, config_.schema, record_id, label, actor, now());
    store_.save_pool(pool);
}

std::size_t Orchestrator::import_pool_labels(const std::string& csv, const std::string& actor) {
    require_actor(actor);
    require_stage_at_least(Stage::pool_selected, "pool label import");
    auto pool = *store_.load_pool();
    auto n = import_pool_labels_csv(pool, config_.schema, csv, actor, now());
    store_.save_pool(pool);
    return n;
}

void Orchestrator::seal_pool(const std::string& actor) {
    require_actor(actor);
    require_stage_at_least(Stage::pool_selected, "sealing the pool");
    auto pool = *store_.load_pool();
    if (pool.status != PoolStatus::verified) {
        annotkit::seal_pool(pool, actor);
        store_.save_pool(pool);
    }
    if (state().stage == Stage::pool_selected) {
        advance_to(Stage::pool_labeled);
    }
}

namespace {

void check_version(const EnhancedPrompt& prompt, std::optional<int> expected) {
    if (expected && *expected != prompt.version) {
        fail(ErrorCode::VersionConflict, "prompt is at version " + std::to_string(prompt.version) +
                                             ", edit was made against version " +
                                             std::to_string(*expected));
    }
}

}  // namespace

void Orchestrator::edit_prompt_rule(const std::string& class_name, const std::string& text,
                                    const std::string& actor, std::optional<int> expected_version) {
    require_actor(actor);
    require_stage_at_least(Stage::prompt_generated, "prompt editing");
    require(state().stage == Stage::prompt_generated, "the prompt is already approved");
    auto prompt = *store_.load_prompt();
    check_version(prompt, expected_version);
    edit_rule(prompt, class_name, text, actor, now());
    store_.save_prompt(prompt);
}

void Orchestrator::add_prompt_correction(const std::string& text, const std::string& actor,
                                         std::optional<int> expected_version) {
    require_actor(actor);
    require_stage_at_least(Stage::prompt_generated, "prompt editing");
    require(state().stage == Stage::prompt_generated, "the prompt is already approved");
    auto prompt = *store_.load_prompt();
    check_version(prompt, expected_version);
    add_correction(prompt, text, actor, now());
    store_.save_prompt(prompt);
}

void Orchestrator::approve_prompt(const std::string& actor, std::optional<int> expected_version) {
    require_actor(actor);
    require_stage_at_least(Stage::prompt_generated, "prompt approval");
    auto prompt = *store_.load_prompt();
    if (!prompt.approved) {
        approve(prompt, actor, expected_version);
        store_.save_prompt(prompt);
    } else {
        check_version(prompt, expected_version);
    }
    if (state().stage == Stage::prompt_generated) {
        advance_to(Stage::prompt_approved);
    }
}

void Orchestrator::override_mismatch(const std::string& record_id, const std::string& label,
                                     const std::string& actor) {
    require_actor(actor);
    require_stage_at_least(Stage::consensus_done, "mismatch override");
    require(state().stage != Stage::finalized, "the run is already finalized");
    auto mismatches = store_.load_mismatches();
    bool known = std::any_of(mismatches.begin(), mismatches.end(),
                             [&](const MismatchRecord& m) { return m.record_id == record_id; });
    if (!known) {
        fail(ErrorCode::UnknownRecord, "'" + record_id + "' is not in the mismatch set");
    }
    store_.append_override({record_id, config_.schema.canonical(label), actor, now()});
}

std::optional<json> Orchestrator::report() const {
    auto text = store_.read_text("report.json");
    if (!text) {
        return std::nullopt;
    }
    return json::parse(*text);
}

std::vector<Shot> Orchestrator::shots_for(const std::string& record_id) {
    require_stage_at_least(Stage::pool_labeled, "shot preview");
    ensure_corpus();
    auto pool = *store_.load_pool();
    if (config_.mmr.k == 0) {
        return {};
    }
    return build_shot_set(corpus_->record(record_id), pool, retrieval_matrix(), *corpus_, config_.mmr);
}

std::string Orchestrator::export_pool_csv() {
    require_stage_at_least(Stage::pool_selected, "pool export");
    ensure_corpus();
    return annotkit::export_pool_csv(*store_.load_pool(), *corpus_);
}

// --- sweep ----------------------------------------------------------------------

std::string format_report_text(const json& report) {
    std::string out = "task: " + report.value("task", std::string()) + "\n";
    out += "records: " + std::to_string(report.value("records", 0)) +
           ", pool: " + std::to_string(report.value("pool_size", 0)) +
           ", annotated: " + std::to_string(report.value("annotated", 0)) +
           ", agreed: " + std::to_string(report.value("agreed", 0)) +
           ", mismatches: " + std::to_string(report.value("mismatches", 0)) +
           ", flagged: " + std::to_string(report.value("flagged", 0)) + "\n";
    if (report.contains("metrics")) {
        for (const char* name : {"final", "annotator_a", "annotator_b", "agreement_subset"}) {
            if (report.at("metrics").contains(name)) {
                out += "\n" + format_table(prf_report_from_json(report.at("metrics").at(name)), name);
            }
        }
    }
    if (report.contains("usage")) {
        const auto& t = report.at("usage").at("total");
        out += "\ncalls: " + std::to_string(t.value("calls", 0)) +
               ", input tokens: " + std::to_string(t.value("input_tokens", 0)) +
               ", output tokens: " + std::to_string(t.value("output_tokens", 0)) + "\n";
    }
    if (report.contains("cost")) {
        char line[96];
        std::snprintf(line, sizeof line, "estimated cost: %.4f %s\n",
                      report.at("cost").value("estimated", 0.0),
                      report.at("cost").value("currency", std::string("USD")).c_str());
        out += line;
    }
    return out;
}

std::vector<SweepRow> sweep_exemplars(const RunConfig& config, const std::vector<std::size_t>& M_values,
                                      BackendFactory factory) {
    require(!M_values.empty(), "sweep needs at least one M");
    std::vector<SweepRow> rows;
    for (auto M : M_values) {
        SweepRow row;
        row.M = M;
        try {
            RunConfig cell = config;
            cell.pool_size = M;
            cell.auto_label_from_gold = true;
            cell.auto_approve_prompt = true;
            cell.run_dir = config.run_dir / "sweep" / ("M" + std::to_string(M));
            Orchestrator run(cell, factory);
            run.run_stage(Stage::coarse_done);
            Labeling labels;
            std::vector<std::string> ids;
            for (const auto& a : run.annotations()) {
                labels[a.record_id] = a.label_a.label;
                ids.push_back(a.record_id);
            }
            row.report = score_against_gold(run.corpus(), labels, ids);
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows,
                               const std::vector<std::string>& classes) {
    std::string out;
    char cell[64];
    std::snprintf(cell, sizeof cell, "%6s", "M");
    out += cell;
    for (const auto& c : classes) {
        std::snprintf(cell, sizeof cell, " %12s", c.substr(0, 12).c_str());
        out += cell;
    }
    out += "     macro-F1     accuracy\n";
    for (const auto& row : rows) {
        std::snprintf(cell, sizeof cell, "%6zu", row.M);
        out += cell;
        if (!row.report) {
            out += "  error: " + row.error + "\n";
            continue;
        }
        for (const auto& c : classes) {
            std::snprintf(cell, sizeof cell, " %12.2f", 100.0 * row.report->per_class.at(c).f1);
            out += cell;
        }
        std::snprintf(cell, sizeof cell, " %12.2f %12.2f\n", 100.0 * row.report->macro_f1,
                      100.0 * row.report->accuracy);
        out += cell;
    }
    return out;
}

json to_json(const std::vector<SweepRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        json j = {{"M", row.M}};
        if (row.report) {
            j["metrics"] = to_json(*row.report);
        } else {
            j["error"] = row.error;
        }
        out.push_back(j);
    }
    return out;
}

}  // namespace annotkit
