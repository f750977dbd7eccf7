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


// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Tolerances and time limits are fixed below.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "annotkit/annotation.hpp"
#include "annotkit/geometry.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/metrics.hpp"
#include "annotkit/orchestrator.hpp"
#include "annotkit/retrieval.hpp"
#include "annotkit/simulation.hpp"
#include "annotkit/text_util.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace annotkit;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

constexpr double kMmrTimeLimitS = 5.0;
constexpr double kKMeansTimeLimitS = 10.0;
constexpr double kKMeansInertiaTol = 1e-9;
constexpr double kPcaTimeLimitS = 5.0;
constexpr double kPcaTol = 1e-8;
constexpr double kMetricsTimeLimitS = 1.0;
// Hand-table fractions are compared at a few ulps of double precision.
constexpr double kMetricsTol = 1e-15;
constexpr double kFisherTimeLimitS = 1.0;
constexpr double kFisherAlpha = 0.05;
// Relative agreement with the quadrature oracle.
constexpr double kFisherOracleRelTol = 1e-6;
constexpr double kCostTimeLimitS = 1.0;
constexpr double kCostTol = 1e-12;
constexpr double kConsensusTimeLimitS = 30.0;
constexpr double kConsensusOracleTolPp = 2.0;
constexpr double kResumeTimeLimitS = 60.0;
constexpr double kNoiseTimeLimitS = 30.0;
constexpr double kNoiseFlagShare = 0.95;

struct Outcome {
    bool ok = true;
    std::string detail;
};

int g_failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = elapsed < limit_s;
    bool pass = out.ok && in_time;
    if (!pass) {
        ++g_failures;
    }
    char timing[96];
    std::snprintf(timing, sizeof(timing), "%.3fs < %.0fs%s", elapsed, limit_s, in_time ? "" : " EXCEEDED");
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << out.detail << " [" << timing << "]"
              << std::endl;
}

RowMatrix to_rows(const oracle::Mat& m) {
    RowMatrix r(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.front().size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
    return r;
}

oracle::Mat gaussian_points(SplitMix64& rng, std::size_t n, std::size_t d) {
    oracle::Mat m(n, oracle::Vec(d));
    for (auto& row : m)
        for (auto& x : row) x = rng.gaussian();
    return m;
}

// --- MMR -------------------------------------------------------------------

Outcome mmr_oracle() {
    SplitMix64 rng(20260101);
    const double lambdas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::size_t checks = 0;
    for (int inst = 0; inst < 200; ++inst) {
        std::size_t n = 1 + rng.below(10);
        std::size_t d = 1 + rng.below(8);
        std::size_t k = 1 + rng.below(n);
        auto pool = gaussian_points(rng, n, d);
        auto query = gaussian_points(rng, 1, d).front();
        std::vector<MmrCandidate> candidates;
        for (std::size_t i = 0; i < n; ++i) {
            candidates.push_back({"c" + std::to_string(i), i, to_rows({pool[i]}).row(0), std::nullopt});
        }
        Eigen::RowVectorXd q = to_rows({query}).row(0);
        for (double lambda : lambdas) {
            MmrConfig cfg;
            cfg.lambda = lambda;
            cfg.k = k;
            auto trace = mmr_trace(q, candidates, cfg);
            auto expect = oracle::mmr_greedy(query, pool, lambda, k);
            std::vector<std::string> got_ids;
            for (const auto& s : trace) got_ids.push_back(s.record_id);
            std::vector<std::string> want_ids;
            for (auto i : expect) want_ids.push_back("c" + std::to_string(i));
            if (got_ids != want_ids) {
                return {false, "instance " + std::to_string(inst) + " lambda " + std::to_string(lambda) +
                                   " differs from brute-force greedy"};
            }
            if (lambda == 1.0) {
                std::vector<std::string> top;
                for (auto i : oracle::top_k_similar(query, pool, k)) top.push_back("c" + std::to_string(i));
                if (got_ids != top) {
                    return {false, "instance " + std::to_string(inst) + ": lambda=1 is not top-k"};
                }
            }
            ++checks;
        }
    }
    return {true, std::to_string(checks) + " (pool, lambda) cases equal brute-force greedy; lambda=1 equals top-k"};
}

// --- k-means / pool ----------------------------------------------------------

Outcome kmeans_oracle() {
    SplitMix64 rng(777);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
    double worst_gap = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        std::size_t k = 1 + rng.below(3);
        std::size_t n = k + rng.below(8 - k + 1);
        std::size_t d = 1 + rng.below(3);
        auto pts = gaussian_points(rng, n, d);
        RowMatrix rows = to_rows(pts);

        auto best = kmeans_best_of(rows, k, seeds);
        double optimum = oracle::kmeans_global_optimum(pts, k);
        double gap = best.inertia - optimum;
        worst_gap = std::max(worst_gap, std::fabs(gap));
        if (std::fabs(gap) > kKMeansInertiaTol) {
            return {false, "instance " + std::to_string(inst) + ": inertia " + std::to_string(best.inertia) +
                               " vs optimum " + std::to_string(optimum)};
        }

        EmbeddingMatrix m;
        m.model_name = "acceptance";
        m.reduced = true;
        m.vectors = rows;
        for (std::size_t i = 0; i < n; ++i) m.record_ids.push_back("p" + std::to_string(i));
        std::uint64_t seed = rng.below(1000);
        auto pool = select_pool(m, k, seed);
        // Hand enumeration: cluster means from the assignment, then the
        // member closest to each mean (first index wins ties).
        for (std::size_t c = 0; c < k; ++c) {
            oracle::Vec mean(d, 0.0);
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (pool.assignments[i] != c) continue;
                ++count;
                for (std::size_t j = 0; j < d; ++j) mean[j] += pts[i][j];
            }
            for (auto& x : mean) x /= static_cast<double>(count);
            std::size_t nearest = n;
            double nearest_d = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (pool.assignments[i] != c) continue;
                double dist = oracle::sq_dist(pts[i], mean);
                if (nearest == n || dist < nearest_d) {
                    nearest = i;
                    nearest_d = dist;
                }
            }
            if (pool.pool_ids[c] != "p" + std::to_string(nearest)) {
                return {false, "instance " + std::to_string(inst) + ": exemplar of cluster " +
                                   std::to_string(c) + " is " + pool.pool_ids[c] + ", hand enumeration p" +
                                   std::to_string(nearest)};
            }
        }
        for (int rep = 0; rep < 3; ++rep) {
            auto again = select_pool(m, k, seed);
            auto again_best = kmeans_best_of(rows, k, seeds);
            if (again.pool_ids != pool.pool_ids || again.assignments != pool.assignments ||
                again_best.assignments != best.assignments || again_best.inertia != best.inertia) {
                return {false, "instance " + std::to_string(inst) + ": not deterministic for a fixed seed"};
            }
        }
    }
    std::ostringstream os;
    os << "100 instances at enumerated optimum (max |gap| " << worst_gap
       << "); exemplars match hand enumeration; 3 identical reruns";
    return {true, os.str()};
}

// --- PCA -------------------------------------------------------------------

Outcome pca_oracle() {
    SplitMix64 rng(4242);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        std::size_t d = 3 + rng.below(8);
        std::size_t n = d + 5 + rng.below(50);
        std::size_t m = 2 + rng.below(d - 1);
        auto pts = gaussian_points(rng, n, d);
        // Anisotropic scales so the spectrum is well separated.
        for (auto& row : pts)
            for (std::size_t j = 0; j < d; ++j) row[j] *= 1.0 + static_cast<double>(j);
        EmbeddingMatrix mat;
        mat.model_name = "acceptance";
        mat.vectors = to_rows(pts);
        for (std::size_t i = 0; i < n; ++i) mat.record_ids.push_back("r" + std::to_string(i));
        auto result = reduce(mat, {ReducerMethod::pca, m, 0});
        auto eig = oracle::jacobi_eigenvalues(oracle::sample_covariance(pts));
        if (result.explained_variance.size() != m) {
            return {false, "dataset " + std::to_string(inst) + ": kept " +
                               std::to_string(result.explained_variance.size()) + " of " + std::to_string(m)};
        }
        for (std::size_t c = 0; c < m; ++c) {
            // Captured variance: sample variance of the projected column.
            oracle::Mat projected;
            for (Eigen::Index r = 0; r < result.matrix.vectors.rows(); ++r) {
                projected.push_back({result.matrix.vectors(r, static_cast<Eigen::Index>(c))});
            }
            double captured = oracle::sample_covariance(projected)[0][0];
            double e1 = std::fabs(result.explained_variance[c] - eig[c]);
            double e2 = std::fabs(captured - eig[c]);
            worst = std::max({worst, e1, e2});
            if (e1 > kPcaTol || e2 > kPcaTol) {
                return {false, "dataset " + std::to_string(inst) + " component " + std::to_string(c) +
                                   ": error " + std::to_string(std::max(e1, e2))};
            }
        }
    }
    std::ostringstream os;
    os << "20 datasets match Jacobi eigenvalues (max error " << worst << ")";
    return {true, os.str()};
}

// --- metrics -----------------------------------------------------------------

double fraction(const std::string& text) {
    auto slash = text.find('/');
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
}

BinaryCoding coding(const nlohmann::json& bits) {
    BinaryCoding c;
    c.positive_class = "one";
    for (std::size_t i = 0; i < bits.size(); ++i) c.values["r" + std::to_string(i)] = bits[i].get<int>();
    return c;
}

Outcome metrics_oracle() {
    auto fixtures = nlohmann::json::parse(read_file(testing_support::fixture("metrics_fixtures.json")));
    auto close = [](double a, double b) { return std::fabs(a - b) <= kMetricsTol; };
    std::size_t checked = 0;
    for (const auto& f : fixtures.at("confusion_fixtures")) {
        std::string name = f.at("name");
        auto table = confusion(f.at("pred").get<Labeling>(), f.at("gold").get<Labeling>(),
                               f.at("classes").get<std::vector<std::string>>());
        for (const auto& [cls, want] : f.at("counts").items()) {
            ClassCounts expect{want.at("tp"), want.at("fp"), want.at("fn"), want.at("tn")};
            if (!(table.counts.at(cls) == expect)) return {false, name + ": counts differ for " + cls};
        }
        auto report = prf1(table);
        for (const auto& [cls, want] : f.at("scores").items()) {
            const auto& s = report.per_class.at(cls);
            if (!close(s.precision, fraction(want.at("precision"))) || !close(s.recall, fraction(want.at("recall"))) ||
                !close(s.f1, fraction(want.at("f1"))) || s.support != want.at("support").get<std::size_t>() ||
                s.degenerate != want.at("degenerate").get<bool>() || s.absent != want.at("absent").get<bool>()) {
                return {false, name + ": scores differ for " + cls};
            }
        }
        const auto& macro = f.at("macro");
        if (!close(report.macro_precision, fraction(macro.at("precision"))) ||
            !close(report.macro_recall, fraction(macro.at("recall"))) ||
            !close(report.macro_f1, fraction(macro.at("f1"))) ||
            !close(report.accuracy, fraction(f.at("accuracy"))) ||
            report.excluded_from_macro != f.at("excluded_from_macro").get<std::vector<std::string>>()) {
            return {false, name + ": macro row differs"};
        }
        ++checked;
    }
    // The 0.5 / 1.0 / 2/3 case, bit for bit.
    {
        const auto& f = fixtures.at("confusion_fixtures").at(0);
        auto r = prf1(confusion(f.at("pred").get<Labeling>(), f.at("gold").get<Labeling>(),
                                f.at("classes").get<std::vector<std::string>>()));
        const auto& pos = r.per_class.at("pos");
        if (pos.precision != 0.5 || pos.recall != 1.0 || pos.f1 != 2.0 / 3.0) {
            return {false, "precision 0.5 / recall 1.0 / F1 2/3 case is not exact"};
        }
    }
    for (const auto& f : fixtures.at("pearson_fixtures")) {
        double r = pearson(coding(f.at("x")), coding(f.at("y")));
        if (r != f.at("r").get<double>()) return {false, f.at("name").get<std::string>() + ": r = " + std::to_string(r)};
        ++checked;
    }
    for (const auto& f : fixtures.at("jaccard_fixtures")) {
        double j = jaccard(coding(f.at("x")), coding(f.at("y")));
        if (j != fraction(f.at("j"))) return {false, f.at("name").get<std::string>() + ": J = " + std::to_string(j)};
        ++checked;
    }
    return {true, std::to_string(checked) + " fixtures reproduce hand tables; r in {1,-1,0} and J in {0,1/3,1} exact"};
}

// --- Fisher z ----------------------------------------------------------------

Outcome fisher_check() {
    const double r1 = 0.38, r2 = 0.14;
    const std::size_t n = 3660;
    double p = correlation_delta_test(r1, n, r2, n);
    double ref = oracle::fisher_p(r1, n, r2, n);
    std::ostringstream os;
    os << "r1=0.38 r2=0.14 n=3660: p=" << p << " (oracle " << ref << ")";
    return {p < kFisherAlpha && std::fabs(p - ref) <= kFisherOracleRelTol * ref, os.str()};
}

// --- cost --------------------------------------------------------------------

Outcome cost_check() {
    auto sheet = PriceSheet::load(fs::path(ANNOTKIT_SOURCE_DIR) / "config" / "prices.json");
    double cheap = estimate_cost(sheet, 1'000'000, 1'000'000, "gpt-3.5-turbo");
    double strong = estimate_cost(sheet, 1'000'000, 1'000'000, "gpt-4-turbo");
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "1M in + 1M out: gpt-3.5-turbo $" << cheap << ", gpt-4-turbo $" << strong << ", ratio "
       << strong / cheap;
    bool ok = std::fabs(cheap - 2.00) < kCostTol && std::fabs(strong - 40.00) < kCostTol && strong / cheap > 5.0;
    return {ok, os.str()};
}

// --- consensus simulation ----------------------------------------------------

double annotated_accuracy(Orchestrator& orch, std::size_t* scored) {
    auto final_text = orch.store().read_text("final.jsonl");
    auto labeling = final_labeling_from_jsonl(final_text.value_or(""));
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const auto& a : orch.annotations()) {
        const auto& rec = orch.corpus().record(a.record_id);
        ++total;
        if (labeling.at(a.record_id).label == *rec.gold_label) ++correct;
    }
    *scored = total;
    return static_cast<double>(correct) / static_cast<double>(total);
}

Outcome consensus_simulation() {
    const double p = 0.8, q = 0.9;
    double expected = oracle::consensus_accuracy_mc(p, q, 2'000'000, 99);
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "oracle " << expected << ";";
    bool ok = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        TempDir dir("accept-consensus");
        testing_support::SyntheticRun spec;
        spec.records = 2000;
        spec.pool_size = 20;
        spec.accuracy_a = p;
        spec.accuracy_b = p;
        spec.judge_accuracy = q;
        spec.provider_seed = seed;
        Orchestrator orch(testing_support::synthetic_config(dir.path(), spec));
        auto state = orch.run_stage(Stage::finalized);
        std::size_t scored = 0;
        double acc = annotated_accuracy(orch, &scored);
        std::size_t mismatches = orch.mismatches().size();
        std::size_t calls = state.usage_by_tag.count("consensus") ? state.usage_by_tag.at("consensus").calls : 0;
        bool seed_ok = acc > p && std::fabs(acc - expected) * 100.0 <= kConsensusOracleTolPp &&
                       calls == 3 * mismatches;
        ok = ok && seed_ok;
        os << " seed " << seed << ": acc " << acc << " over " << scored << ", consensus calls " << calls
           << " = 3x" << mismatches << (seed_ok ? "" : " (failed)") << ";";
    }
    return {ok, os.str()};
}

// --- resumability ------------------------------------------------------------

testing_support::SyntheticRun resume_spec() {
    testing_support::SyntheticRun s;
    s.records = 200;
    s.pool_size = 40;
    return s;
}

Outcome resumability() {
    TempDir ref_dir("accept-ref");
    std::vector<std::string> checkpoints;
    std::string ref_final, ref_manifest;
    {
        Orchestrator orch(testing_support::synthetic_config(ref_dir.path(), resume_spec()));
        orch.set_checkpoint_hook([&](const std::string& name) { checkpoints.push_back(name); });
        orch.run_stage(Stage::finalized);
        ref_final = orch.store().read_text("final.jsonl").value_or("");
        ref_manifest = orch.store().read_text("manifest.json").value_or("");
    }
    if (ref_final.empty() || ref_manifest.empty()) return {false, "reference run left no final.jsonl/manifest.json"};

    for (std::size_t kill_at = 0; kill_at < checkpoints.size(); ++kill_at) {
        TempDir dir("accept-resume");
        auto config = testing_support::synthetic_config(dir.path(), resume_spec());
        std::cout.flush();
        pid_t pid = ::fork();
        if (pid < 0) return {false, "fork failed"};
        if (pid == 0) {
            std::size_t seen = 0;
            try {
                Orchestrator orch(config);
                orch.set_checkpoint_hook([&](const std::string&) {
                    if (seen++ == kill_at) ::_exit(0);
                });
                orch.run_stage(Stage::finalized);
            } catch (...) {
                ::_exit(2);
            }
            ::_exit(1);
        }
        int status = 0;
        ::waitpid(pid, &status, 0);
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            return {false, "child did not stop at checkpoint " + checkpoints[kill_at]};
        }
        Orchestrator resumed(config);
        resumed.run_stage(Stage::finalized);
        if (resumed.store().read_text("final.jsonl").value_or("") != ref_final) {
            return {false, "final.jsonl differs after kill at " + checkpoints[kill_at]};
        }
        if (resumed.store().read_text("manifest.json").value_or("") != ref_manifest) {
            return {false, "manifest.json differs after kill at " + checkpoints[kill_at]};
        }
    }
    return {true, "killed at each of " + std::to_string(checkpoints.size()) +
                      " checkpoints; resumed final.jsonl and manifest.json byte-identical"};
}

// --- noise flagging ----------------------------------------------------------

Outcome noise_flagging() {
    TempDir dir("accept-noise");
    testing_support::SyntheticRun spec;
    spec.records = 2000;
    spec.pool_size = 20;
    auto config = testing_support::synthetic_config(dir.path(), spec);

    SyntheticCorpusSpec corpus_spec;
    corpus_spec.records = spec.records;
    corpus_spec.seed = spec.corpus_seed;
    auto records = synthetic_records(corpus_spec);
    auto truth = std::make_shared<TruthTable>();
    truth->classes = corpus_spec.classes;
    for (const auto& r : records) truth->label_by_text[r.text] = *r.gold_label;

    // Corrupt 10% of gold labels; annotators and judge still see the truth.
    SplitMix64 rng(5150);
    std::set<std::string> corrupted;
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i = 0; i < records.size() / 10; ++i) {
        auto& r = records[order[i]];
        r.gold_label = *r.gold_label == "approve" ? "oppose" : "approve";
        corrupted.insert(r.record_id);
    }
    write_file_atomic(config.corpus_path, synthetic_jsonl(records));

    std::shared_ptr<const TruthTable> shared_truth = truth;
    BackendFactory factory = [&](const ProviderSettings& s, const std::string& role,
                                 const Corpus* corpus) -> std::shared_ptr<Backend> {
        if (role == "embedder") return default_backend(s, role, corpus);
        auto mock = std::make_shared<MockBackend>(s.provider);
        if (role == "judge") {
            mock->add_handler(simulated_judge(shared_truth, 1.0, s.simulate_salt));
        } else {
            if (s.scripted_rules) mock->add_handler(scripted_rule_writer());
            mock->add_handler(simulated_annotator(shared_truth, {0.8, s.simulate_salt, 0.0}));
        }
        return mock;
    };
    Orchestrator orch(config, factory);
    orch.run_stage(Stage::finalized);

    std::set<std::string> flagged;
    auto csv = parse_csv(orch.store().read_text("flagged.csv").value_or(""));
    for (std::size_t i = 1; i < csv.size(); ++i) flagged.insert(csv[i].at(0));
    std::size_t reached = 0, hit = 0;
    for (const auto& m : orch.mismatches()) {
        if (!corrupted.count(m.record_id)) continue;
        ++reached;
        if (flagged.count(m.record_id)) ++hit;
    }
    double share = reached == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(reached);
    std::ostringstream os;
    os << hit << " of " << reached << " corrupted mismatches flagged (" << 100.0 * share << "%), "
       << flagged.size() << " flagged overall";
    return {reached > 0 && share >= kNoiseFlagShare, os.str()};
}

}  // namespace

int main() {
    criterion("mmr_oracle", kMmrTimeLimitS, mmr_oracle);
    criterion("kmeans_pool_oracle", kKMeansTimeLimitS, kmeans_oracle);
    criterion("pca_variance", kPcaTimeLimitS, pca_oracle);
    criterion("metrics_oracle", kMetricsTimeLimitS, metrics_oracle);
    criterion("correlation_difference", kFisherTimeLimitS, fisher_check);
    criterion("cost_estimator", kCostTimeLimitS, cost_check);
    criterion("consensus_simulation", kConsensusTimeLimitS, consensus_simulation);
    criterion("resumability", kResumeTimeLimitS, resumability);
    criterion("noise_flagging", kNoiseTimeLimitS, noise_flagging);
    std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED") << std::endl;
    return g_failures == 0 ? 0 : 1;
}
