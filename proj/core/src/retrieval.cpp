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

#include "annotkit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "annotkit/errors.hpp"
#include "annotkit/geometry.hpp"

namespace annotkit {

std::string to_string(Similarity similarity) {
    switch (similarity) {
        case Similarity::cosine: return "cosine";
        case Similarity::dot: return "dot";
        case Similarity::neg_euclidean: return "neg_euclidean";
    }
    return "cosine";
}

Similarity similarity_from_string(const std::string& text) {
    if (text == "cosine") return Similarity::cosine;
    if (text == "dot") return Similarity::dot;
    if (text == "neg_euclidean") return Similarity::neg_euclidean;
    fail(ErrorCode::ConfigError, "unknown similarity '" + text + "'");
}

void MmrConfig::validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
}

double similarity(Similarity kind, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                  const Eigen::Ref<const Eigen::RowVectorXd>& y) {
    if (x.size() != y.size()) {
        fail(ErrorCode::DimensionMismatch, "similarity of vectors with different dimensions");
    }
    switch (kind) {
        case Similarity::cosine: return cosine_similarity(x, y);
        case Similarity::dot: return x.dot(y);
        case Similarity::neg_euclidean: return -std::sqrt(squared_euclidean(x, y));
    }
    return 0.0;
}

std::vector<MmrStep> mmr_trace(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                               const std::vector<MmrCandidate>& candidates, const MmrConfig& config) {
    config.validate();
    if (config.k > candidates.size()) {
        fail(ErrorCode::KTooLarge, "k = " + std::to_string(config.k) + " but only " +
                                       std::to_string(candidates.size()) + " candidates");
    }
    std::set<std::string> classes;
    if (config.class_constrained) {
        for (const auto& c : candidates) {
            if (!c.label) {
                fail(ErrorCode::UnlabeledPool,
                     "class-constrained MMR needs labels; '" + c.record_id + "' has none");
            }
            classes.insert(*c.label);
        }
    }

    // Visit candidates in row order so strict '>' leaves ties with the lower row.
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].row < candidates[b].row; });

    std::vector<double> relevance(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        relevance[i] = similarity(config.similarity, query, candidates[i].vector);
    }
    // Running max similarity to the selected set; S empty contributes 0.
    std::vector<double> redundancy(candidates.size(), 0.0);
    std::vector<bool> selected(candidates.size(), false);
    std::set<std::string> represented;
    std::vector<MmrStep> steps;

    while (steps.size() < config.k) {
        bool constrained = config.class_constrained && represented.size() < classes.size();
        std::size_t best = candidates.size();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            if (selected[i]) {
                continue;
            }
            if (constrained && represented.contains(*candidates[i].label)) {
                continue;
            }
            double score = config.lambda * relevance[i] - (1.0 - config.lambda) * redundancy[i];
            if (best == candidates.size() || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        selected[best] = true;
        steps.push_back({candidates[best].record_id, best_score, relevance[best], redundancy[best]});
        if (candidates[best].label) {
            represented.insert(*candidates[best].label);
        }
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (selected[i]) {
                continue;
            }
            double s = similarity(config.similarity, candidates[i].vector, candidates[best].vector);
            redundancy[i] = steps.size() == 1 ? s : std::max(redundancy[i], s);
        }
    }
    return steps;
}

std::vector<MmrCandidate> pool_candidates(const ExemplarPool& pool, const EmbeddingMatrix& matrix,
                                          const std::string& exclude) {
    std::vector<MmrCandidate> out;
    out.reserve(pool.pool_ids.size());
    for (const auto& id : pool.pool_ids) {
        if (id == exclude) {
            continue;
        }
        auto row = matrix.row_of(id);
        if (!row) {
            fail(ErrorCode::UnknownRecord, "pool member '" + id + "' missing from matrix");
        }
        out.push_back({id, *row, matrix.vectors.row(static_cast<Eigen::Index>(*row)), pool.label_of(id)});
    }
    return out;
}

std::vector<std::string> mmr_select(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                    const ExemplarPool& pool, const EmbeddingMatrix& matrix,
                                    const MmrConfig& config, const std::string& exclude) {
    if (query.size() != static_cast<Eigen::Index>(matrix.dimension())) {
        fail(ErrorCode::DimensionMismatch, "query dimension does not match the matrix");
    }
    auto steps = mmr_trace(query, pool_candidates(pool, matrix, exclude), config);
    std::vector<std::string> ids;
    ids.reserve(steps.size());
    for (auto& s : steps) {
        ids.push_back(std::move(s.record_id));
    }
    return ids;
}

std::vector<Shot> build_shot_set(const TextRecord& query, const ExemplarPool& pool,
                                 const EmbeddingMatrix& matrix, const Corpus& corpus,
                                 const MmrConfig& config) {
    if (config.k == 0) {
        return {};
    }
    if (pool.status != PoolStatus::labeled && pool.status != PoolStatus::verified) {
        fail(ErrorCode::UnlabeledPool, "few-shot retrieval needs a labeled pool");
    }
    auto row = matrix.row_of(query.record_id);
    if (!row) {
        fail(ErrorCode::UnknownRecord, "query '" + query.record_id + "' has no embedding");
    }
    auto ids = mmr_select(matrix.vectors.row(static_cast<Eigen::Index>(*row)), pool, matrix, config,
                          query.record_id);
    std::vector<Shot> shots;
    shots.reserve(ids.size());
    for (const auto& id : ids) {
        shots.push_back({id, corpus.record(id).text, pool.labeled.at(id)});
    }
    return shots;
}

}  // namespace annotkit
