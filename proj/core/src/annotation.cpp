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

#include "annotkit/annotation.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;

namespace {

/// Runs fn(0..n-1) on up to `workers` threads. Rethrows the first failure
/// after all threads stop; `finished[i]` marks the indices that completed.
void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn,
                  std::vector<char>& finished) {
    finished.assign(n, 0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto loop = [&] {
        while (!stop.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
                finished[i] = 1;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) {
                    error = std::current_exception();
                }
                stop.store(true);
            }
        }
    };
    std::size_t count = std::max<std::size_t>(1, std::min(workers, n));
    if (count == 1) {
        loop();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < count; ++t) {
            threads.emplace_back(loop);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<std::string> shot_ids(const std::vector<Shot>& shots) {
    std::vector<std::string> ids;
    for (const auto& s : shots) {
        ids.push_back(s.record_id);
    }
    return ids;
}

std::vector<Shot> shots_for(const TextRecord& record, const ExemplarPool& pool,
                            const EmbeddingMatrix& matrix, const Corpus& corpus,
                            const MmrConfig& config) {
    if (config.k == 0) {
        return {};
    }
    return build_shot_set(record, pool, matrix, corpus, config);
}

json parsed_to_json(const ParsedLabel& p) {
    return {{"label", p.label}, {"raw", p.raw}, {"parse_path", to_string(p.parse_path)}};
}

ParsedLabel parsed_from_json(const json& j) {
    ParsedLabel p;
    p.label = j.at("label").get<std::string>();
    p.raw = j.at("raw").get<std::string>();
    p.parse_path = parse_path_from_string(j.at("parse_path").get<std::string>());
    return p;
}

/// Last delimited token of a transcript, case folded.
std::optional<std::string> last_delimited(const std::string& text, const LabelSchema& schema) {
    std::size_t close = text.rfind(schema.close_delimiter);
    if (close == std::string::npos) {
        return std::nullopt;
    }
    std::size_t open = text.rfind(schema.open_delimiter, close);
    if (open == std::string::npos) {
        return std::nullopt;
    }
    std::size_t start = open + schema.open_delimiter.size();
    return normalize_label(text.substr(start, close - start));
}

template <typename Record>
std::vector<Record> merge_in_order(const std::vector<std::string>& order,
                                   std::unordered_map<std::string, Record>& by_id) {
    std::vector<Record> out;
    for (const auto& id : order) {
        auto it = by_id.find(id);
        if (it != by_id.end()) {
            out.push_back(std::move(it->second));
        }
    }
    return out;
}

}  // namespace

std::string to_string(ChosenResponse chosen) {
    switch (chosen) {
        case ChosenResponse::r1: return "r1";
        case ChosenResponse::r2: return "r2";
        case ChosenResponse::neither: return "neither";
    }
    return "neither";
}

std::string to_string(Resolution resolution) {
    switch (resolution) {
        case Resolution::judge: return "judge";
        case Resolution::human_override: return "human_override";
        case Resolution::pending: return "pending";
    }
    return "pending";
}

ChosenResponse chosen_response_from_string(const std::string& text) {
    if (text == "r1") return ChosenResponse::r1;
    if (text == "r2") return ChosenResponse::r2;
    if (text == "neither") return ChosenResponse::neither;
    fail(ErrorCode::ParseError, "unknown chosen_response '" + text + "'");
}

Resolution resolution_from_string(const std::string& text) {
    if (text == "judge") return Resolution::judge;
    if (text == "human_override") return Resolution::human_override;
    if (text == "pending") return Resolution::pending;
    fail(ErrorCode::ParseError, "unknown resolution '" + text + "'");
}

std::string to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::agreement: return "agreement";
        case Provenance::consensus: return "consensus";
        case Provenance::human: return "human";
    }
    return "human";
}

Provenance provenance_from_string(const std::string& text) {
    if (text == "agreement") return Provenance::agreement;
    if (text == "consensus") return Provenance::consensus;
    if (text == "human") return Provenance::human;
    fail(ErrorCode::ParseError, "unknown provenance '" + text + "'");
}

// --- stage 2 ----------------------------------------------------------------

std::vector<AnnotationRecord> coarse_annotate(
    const Corpus& corpus, const EnhancedPrompt& prompt, const ExemplarPool& pool,
    const EmbeddingMatrix& matrix, Gateway& annotator_a, Gateway& annotator_b,
    const AnnotationOptions& options, const std::vector<AnnotationRecord>& done,
    const std::function<void(const std::vector<AnnotationRecord>&)>& on_batch) {
    if (!prompt.approved) {
        fail(ErrorCode::NotApproved, "coarse annotation needs an approved prompt");
    }
    options.mmr.validate();
    require(options.batch_size > 0, "batch size must be positive");
    if (options.mmr.k > 0 && pool.status != PoolStatus::labeled &&
        pool.status != PoolStatus::verified) {
        fail(ErrorCode::UnlabeledPool, "few-shot annotation needs a labeled pool");
    }
    require(annotator_a.config().provider_id != annotator_b.config().provider_id,
            "the two annotators must be different providers");

    std::unordered_map<std::string, AnnotationRecord> by_id;
    for (const auto& r : done) {
        by_id.emplace(r.record_id, r);
    }
    std::vector<std::string> order;
    std::vector<const TextRecord*> todo;
    for (const auto& rec : corpus.records()) {
        if (pool.contains(rec.record_id)) {
            continue;
        }
        order.push_back(rec.record_id);
        if (!by_id.count(rec.record_id)) {
            todo.push_back(&rec);
        }
    }

    const auto& schema = corpus.schema();
    const std::string prompt_hash = prompt.content_hash();
    for (std::size_t begin = 0; begin < todo.size(); begin += options.batch_size) {
        std::size_t end = std::min(todo.size(), begin + options.batch_size);
        std::vector<AnnotationRecord> batch(end - begin);
        std::vector<char> finished;
        auto work = [&](std::size_t i) {
            const TextRecord& rec = *todo[begin + i];
            auto shots = shots_for(rec, pool, matrix, corpus, options.mmr);
            auto request = assemble(prompt, shots, rec.text, PromptMode::plain);
            auto resp_a = annotator_a.complete(request, "coarse");
            auto resp_b = annotator_b.complete(request, "coarse");
            AnnotationRecord out;
            out.record_id = rec.record_id;
            out.label_a = parse_label(resp_a.text, schema);
            out.label_b = parse_label(resp_b.text, schema);
            out.agreed = out.label_a.ok() && out.label_b.ok() && out.label_a.label == out.label_b.label;
            out.provider_a = annotator_a.config().provider_id;
            out.provider_b = annotator_b.config().provider_id;
            out.shots_used = shot_ids(shots);
            out.prompt_hash = prompt_hash;
            batch[i] = std::move(out);
        };
        try {
            run_parallel(batch.size(), options.workers, work, finished);
        } catch (...) {
            // Keep what finished so a retry only redoes the failed records.
            std::vector<AnnotationRecord> partial;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (finished[i]) {
                    partial.push_back(batch[i]);
                }
            }
            if (on_batch && !partial.empty()) {
                on_batch(partial);
            }
            throw;
        }
        if (on_batch) {
            on_batch(batch);
        }
        for (auto& r : batch) {
            by_id.emplace(r.record_id, std::move(r));
        }
    }
    return merge_in_order(order, by_id);
}

std::vector<std::string> mismatch_ids(const std::vector<AnnotationRecord>& annotations) {
    std::vector<std::string> ids;
    for (const auto& a : annotations) {
        if (!a.agreed) {
            ids.push_back(a.record_id);
        }
    }
    return ids;
}

// --- stage 3 ----------------------------------------------------------------

JudgeResult interpret_judge(const std::string& transcript, const CotResult& cot_a,
                            const CotResult& cot_b, const LabelSchema& schema) {
    JudgeResult out;
    out.reasoning = transcript;
    out.verdict.raw = transcript;

    auto token = last_delimited(transcript, schema);
    if (token && (*token == "response 1" || *token == "response 2")) {
        const CotResult& picked = *token == "response 1" ? cot_a : cot_b;
        if (picked.label.ok()) {
            out.verdict.label = picked.label.label;
            out.verdict.parse_path = ParsePath::delimited;
            out.chosen = *token == "response 1" ? ChosenResponse::r1 : ChosenResponse::r2;
        }
        return out;
    }
    if (token && *token == "neither") {
        return out;
    }

    out.verdict = parse_label(transcript, schema);
    if (!out.verdict.ok()) {
        return out;
    }
    if (cot_a.label.ok() && cot_a.label.label == out.verdict.label) {
        out.chosen = ChosenResponse::r1;
    } else if (cot_b.label.ok() && cot_b.label.label == out.verdict.label) {
        out.chosen = ChosenResponse::r2;
    }
    return out;
}

std::vector<MismatchRecord> consensus_resolve(
    const std::vector<std::string>& mismatches, const Corpus& corpus, const EnhancedPrompt& prompt,
    const ExemplarPool& pool, const EmbeddingMatrix& matrix, Gateway& annotator_a,
    Gateway& annotator_b, Gateway& judge, const AnnotationOptions& options,
    const std::vector<MismatchRecord>& done,
    const std::function<void(const std::vector<MismatchRecord>&)>& on_batch) {
    require(!mismatches.empty(), "consensus needs a non-empty mismatch set");
    if (!prompt.approved) {
        fail(ErrorCode::NotApproved, "consensus needs an approved prompt");
    }
    require(options.batch_size > 0, "batch size must be positive");

    std::unordered_map<std::string, MismatchRecord> by_id;
    for (const auto& r : done) {
        by_id.emplace(r.record_id, r);
    }
    std::vector<std::string> todo;
    for (const auto& id : mismatches) {
        if (!corpus.contains(id)) {
            fail(ErrorCode::UnknownRecord, "mismatch id '" + id + "' is not in the corpus");
        }
        if (!by_id.count(id)) {
            todo.push_back(id);
        }
    }

    const auto& schema = corpus.schema();
    for (std::size_t begin = 0; begin < todo.size(); begin += options.batch_size) {
        std::size_t end = std::min(todo.size(), begin + options.batch_size);
        std::vector<MismatchRecord> batch(end - begin);
        std::vector<char> finished;
        auto work = [&](std::size_t i) {
            const TextRecord& rec = corpus.record(todo[begin + i]);
            auto shots = shots_for(rec, pool, matrix, corpus, options.mmr);
            auto cot_request = assemble(prompt, shots, rec.text, PromptMode::cot);
            auto resp_a = annotator_a.complete(cot_request, "consensus");
            auto resp_b = annotator_b.complete(cot_request, "consensus");
            MismatchRecord out;
            out.record_id = rec.record_id;
            out.cot_a = {resp_a.text, parse_label(resp_a.text, schema)};
            out.cot_b = {resp_b.text, parse_label(resp_b.text, schema)};
            auto judge_request = assemble(prompt, {}, rec.text, PromptMode::judge,
                                          JudgeCandidates{resp_a.text, resp_b.text});
            auto verdict = judge.complete(judge_request, "consensus");
            out.judge = interpret_judge(verdict.text, out.cot_a, out.cot_b, schema);
            if (out.judge.chosen != ChosenResponse::neither) {
                out.final_label = out.judge.verdict.label;
                out.resolution = Resolution::judge;
            }
            batch[i] = std::move(out);
        };
        try {
            run_parallel(batch.size(), options.workers, work, finished);
        } catch (...) {
            std::vector<MismatchRecord> partial;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (finished[i]) {
                    partial.push_back(batch[i]);
                }
            }
            if (on_batch && !partial.empty()) {
                on_batch(partial);
            }
            throw;
        }
        if (on_batch) {
            on_batch(batch);
        }
        for (auto& r : batch) {
            by_id.emplace(r.record_id, std::move(r));
        }
    }
    return merge_in_order(mismatches, by_id);
}

// --- finalize ---------------------------------------------------------------

FinalizeResult finalize(const Corpus& corpus, const ExemplarPool& pool,
                        const std::vector<AnnotationRecord>& annotations,
                        const std::vector<MismatchRecord>& mismatches,
                        const std::map<std::string, std::string>& overrides) {
    const auto& schema = corpus.schema();
    std::unordered_map<std::string, const AnnotationRecord*> ann;
    for (const auto& a : annotations) {
        if (!corpus.contains(a.record_id)) {
            fail(ErrorCode::UnknownRecord, "annotation for unknown record '" + a.record_id + "'");
        }
        ann[a.record_id] = &a;
    }
    std::unordered_map<std::string, const MismatchRecord*> mis;
    for (const auto& m : mismatches) {
        mis[m.record_id] = &m;
    }
    for (const auto& [id, label] : overrides) {
        if (!corpus.contains(id)) {
            fail(ErrorCode::UnknownRecord, "override for unknown record '" + id + "'");
        }
        auto it = ann.find(id);
        require(it != ann.end() && !it->second->agreed,
                "override for '" + id + "' does not target a mismatch");
        schema.canonical(label);
    }

    FinalizeResult result;
    std::vector<std::string> unresolved;
    for (const auto& rec : corpus.records()) {
        const auto& id = rec.record_id;
        if (pool.contains(id)) {
            auto label = pool.label_of(id);
            require(label.has_value(), "pool member '" + id + "' has no human label");
            result.labeling[id] = {*label, Provenance::human};
            continue;
        }
        auto a = ann.find(id);
        require(a != ann.end(), "record '" + id + "' has no coarse annotation");
        if (a->second->agreed) {
            result.labeling[id] = {a->second->label_a.label, Provenance::agreement};
            continue;
        }
        auto o = overrides.find(id);
        if (o != overrides.end()) {
            result.labeling[id] = {schema.canonical(o->second), Provenance::human};
            continue;
        }
        auto m = mis.find(id);
        if (m == mis.end() || !m->second->final_label) {
            unresolved.push_back(id);
            continue;
        }
        result.labeling[id] = {*m->second->final_label,
                               m->second->resolution == Resolution::human_override
                                   ? Provenance::human
                                   : Provenance::consensus};
    }
    if (!unresolved.empty()) {
        std::string names;
        for (const auto& id : unresolved) {
            names += (names.empty() ? "" : ", ") + id;
        }
        fail(ErrorCode::UnresolvedMismatch,
             std::to_string(unresolved.size()) + " unresolved mismatch(es): " + names);
    }

    for (const auto& m : mismatches) {
        if (!m.judge.verdict.ok() || !corpus.contains(m.record_id)) {
            continue;
        }
        const auto& rec = corpus.record(m.record_id);
        const auto& reference = rec.human_label ? rec.human_label : rec.gold_label;
        if (reference && *reference != m.judge.verdict.label) {
            result.flagged.push_back({m.record_id, *reference, m.judge.verdict.label, m.judge.reasoning});
        }
    }
    return result;
}

std::string flagged_csv(const std::vector<FlaggedItem>& flagged) {
    std::string out = "record_id,human_label,judge_label,judge_reasoning\n";
    for (const auto& f : flagged) {
        out += csv_escape(f.record_id) + "," + csv_escape(f.human_label) + "," +
               csv_escape(f.judge_label) + "," + csv_escape(f.judge_reasoning) + "\n";
    }
    return out;
}

// --- serialization ----------------------------------------------------------

json to_json(const AnnotationRecord& r) {
    return {{"record_id", r.record_id},
            {"label_a", parsed_to_json(r.label_a)},
            {"label_b", parsed_to_json(r.label_b)},
            {"agreed", r.agreed},
            {"provider_a", r.provider_a},
            {"provider_b", r.provider_b},
            {"shots_used", r.shots_used},
            {"prompt_hash", r.prompt_hash}};
}

AnnotationRecord annotation_from_json(const json& j) {
    AnnotationRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.label_a = parsed_from_json(j.at("label_a"));
    r.label_b = parsed_from_json(j.at("label_b"));
    r.agreed = j.at("agreed").get<bool>();
    r.provider_a = j.at("provider_a").get<std::string>();
    r.provider_b = j.at("provider_b").get<std::string>();
    r.shots_used = j.at("shots_used").get<std::vector<std::string>>();
    r.prompt_hash = j.at("prompt_hash").get<std::string>();
    return r;
}

json to_json(const MismatchRecord& r) {
    json j = {{"record_id", r.record_id},
              {"cot_a", {{"reasoning", r.cot_a.reasoning}, {"label", parsed_to_json(r.cot_a.label)}}},
              {"cot_b", {{"reasoning", r.cot_b.reasoning}, {"label", parsed_to_json(r.cot_b.label)}}},
              {"judge",
               {{"reasoning", r.judge.reasoning},
                {"verdict", parsed_to_json(r.judge.verdict)},
                {"chosen_response", to_string(r.judge.chosen)}}},
              {"resolution", to_string(r.resolution)}};
    j["final_label"] = r.final_label ? json(*r.final_label) : json(nullptr);
    return j;
}

MismatchRecord mismatch_from_json(const json& j) {
    MismatchRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.cot_a = {j.at("cot_a").at("reasoning").get<std::string>(), parsed_from_json(j.at("cot_a").at("label"))};
    r.cot_b = {j.at("cot_b").at("reasoning").get<std::string>(), parsed_from_json(j.at("cot_b").at("label"))};
    const auto& judge = j.at("judge");
    r.judge.reasoning = judge.at("reasoning").get<std::string>();
    r.judge.verdict = parsed_from_json(judge.at("verdict"));
    r.judge.chosen = chosen_response_from_string(judge.at("chosen_response").get<std::string>());
    if (!j.at("final_label").is_null()) {
        r.final_label = j.at("final_label").get<std::string>();
    }
    r.resolution = resolution_from_string(j.at("resolution").get<std::string>());
    return r;
}

json to_json(const FinalLabeling& labeling) {
    json out = json::object();
    for (const auto& [id, e] : labeling) {
        out[id] = {{"label", e.label}, {"provenance", to_string(e.provenance)}};
    }
    return out;
}

std::string final_labeling_jsonl(const FinalLabeling& labeling) {
    std::string out;
    for (const auto& [id, e] : labeling) {
        nlohmann::ordered_json line;
        line["record_id"] = id;
        line["label"] = e.label;
        line["provenance"] = to_string(e.provenance);
        out += line.dump() + "\n";
    }
    return out;
}

FinalLabeling final_labeling_from_jsonl(const std::string& text) {
    FinalLabeling out;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto j = json::parse(line);
            out[j.at("record_id").get<std::string>()] = {
                j.at("label").get<std::string>(),
                provenance_from_string(j.at("provenance").get<std::string>())};
        } catch (const json::exception& e) {
            fail(ErrorCode::ParseError, "final labeling line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace annotkit
