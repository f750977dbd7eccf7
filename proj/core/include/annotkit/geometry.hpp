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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "annotkit/corpus_store.hpp"

namespace annotkit {

/// 1 - x.y / (|x||y|), clamped to [0, 2]. Throws ZeroNorm / DimensionMismatch.
double cosine_distance(std::span<const double> x, std::span<const double> y);
double cosine_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                       const Eigen::Ref<const Eigen::RowVectorXd>& y);

inline double cosine_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                const Eigen::Ref<const Eigen::RowVectorXd>& y) {
    return 1.0 - cosine_distance(x, y);
}

double squared_euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         const Eigen::Ref<const Eigen::RowVectorXd>& y);

// ---------------------------------------------------------------------------
// Dimensionality reduction
// ---------------------------------------------------------------------------

enum class ReducerMethod { pca, external };

struct ReducerSpec {
    ReducerMethod method = ReducerMethod::pca;
    std::size_t target_dimension = 24;
    std::uint64_t seed = 0;
};

struct ReductionResult {
    EmbeddingMatrix matrix;
    /// Sample-covariance eigenvalue of each kept component, descending.
    std::vector<double> explained_variance;
    /// One principal axis per row (empty for external reductions).
    RowMatrix components;
    Eigen::RowVectorXd mean;
    /// Set when the data has fewer informative directions than requested;
    /// only the informative ones are returned.
    bool rank_deficient = false;
    std::string warning;
};

class Reducer {
public:
    virtual ~Reducer() = default;
    virtual ReductionResult reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec) const = 0;
};

/// Centers columns, projects onto the top principal axes of the sample
/// covariance (n - 1 denominator) in descending eigenvalue order. Each axis is
/// sign-fixed so its largest-magnitude loading is positive.
class PcaReducer final : public Reducer {
public:
    ReductionResult reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec) const override;
};

/// Adopts a matrix reduced by an outside tool (e.g. UMAP) after checking it
/// lines up with the raw matrix row-for-row.
class ExternalReducer final : public Reducer {
public:
    explicit ExternalReducer(EmbeddingMatrix pre_reduced) : pre_reduced_(std::move(pre_reduced)) {}
    ReductionResult reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec) const override;

private:
    EmbeddingMatrix pre_reduced_;
};

/// Convenience for the built-in PCA path.
ReductionResult reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec);

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansResult {
    std::vector<std::size_t> assignments;
    RowMatrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    /// Inertia after each centroid update; non-increasing.
    std::vector<double> inertia_history;
    bool converged = false;
};

/// Lloyd's algorithm, k-means++ seeding, Euclidean metric. Nearest-centroid
/// ties go to the lower cluster index. An empty cluster is re-seeded at the
/// point farthest from its own centroid. At each Lloyd fixed point a pass of
/// single-point transfers (Hartigan moves) runs; Lloyd resumes if any point
/// moved, so the result is stable under both update rules.
KMeansResult kmeans(const RowMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 300);
KMeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 300);

/// Lowest-inertia run over `seeds` (ties keep the earlier seed).
KMeansResult kmeans_best_of(const RowMatrix& points, std::size_t k,
                            const std::vector<std::uint64_t>& seeds, std::size_t max_iters = 300);

std::size_t nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& point,
                             const RowMatrix& centroids);

double inertia_of(const RowMatrix& points, const std::vector<std::size_t>& assignments,
                  const RowMatrix& centroids);

}  // namespace annotkit
