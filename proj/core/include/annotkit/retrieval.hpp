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

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "annotkit/corpus_store.hpp"
#include "annotkit/exemplar_pool.hpp"

namespace annotkit {

enum class Similarity { cosine, dot, neg_euclidean };

std::string to_string(Similarity similarity);
Similarity similarity_from_string(const std::string& text);

struct MmrConfig {
    double lambda = 0.5;
    /// Shots per prompt; 0 means zero-shot.
    std::size_t k = 4;
    Similarity similarity = Similarity::cosine;
    /// Prefer candidates whose class is not yet represented until every
    /// class present in the pool has one shot.
    bool class_constrained = false;

    void validate() const;
};

double similarity(Similarity kind, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                  const Eigen::Ref<const Eigen::RowVectorXd>& y);

struct MmrCandidate {
    std::string record_id;
    /// Matrix row; lower rows win score ties.
    std::size_t row = 0;
    Eigen::RowVectorXd vector;
    std::optional<std::string> label;
};

struct MmrStep {
    std::string record_id;
    double score = 0.0;
    double relevance = 0.0;
    double redundancy = 0.0;
};

/// Greedy maximal marginal relevance over `candidates`:
/// argmax lambda*Sim(q, x) - (1 - lambda) * max_{s in S} Sim(x, s), with the
/// max over an empty S taken as 0. Returns one step per pick.
std::vector<MmrStep> mmr_trace(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                               const std::vector<MmrCandidate>& candidates, const MmrConfig& config);

/// Candidates built from a pool and the matrix its rows live in. `exclude`
/// drops one id (the query itself).
std::vector<MmrCandidate> pool_candidates(const ExemplarPool& pool, const EmbeddingMatrix& matrix,
                                          const std::string& exclude = {});

std::vector<std::string> mmr_select(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                    const ExemplarPool& pool, const EmbeddingMatrix& matrix,
                                    const MmrConfig& config, const std::string& exclude = {});

struct Shot {
    std::string record_id;
    std::string text;
    std::string label;

    bool operator==(const Shot&) const = default;
};

/// Few-shot examples for one query: MMR ids resolved to (text, human label)
/// in selection order. The query never appears among its own shots.
std::vector<Shot> build_shot_set(const TextRecord& query, const ExemplarPool& pool,
                                 const EmbeddingMatrix& matrix, const Corpus& corpus,
                                 const MmrConfig& config);

}  // namespace annotkit
