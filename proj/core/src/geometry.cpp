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

#include "annotkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

double cosine_distance(std::span<const double> x, std::span<const double> y) {
    using Map = Eigen::Map<const Eigen::RowVectorXd>;
    return cosine_distance(Map(x.data(), static_cast<Eigen::Index>(x.size())),
                           Map(y.data(), static_cast<Eigen::Index>(y.size())));
}

double cosine_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                       const Eigen::Ref<const Eigen::RowVectorXd>& y) {
    if (x.size() != y.size()) {
        fail(ErrorCode::DimensionMismatch, "cosine_distance: " + std::to_string(x.size()) +
                                               " vs " + std::to_string(y.size()));
    }
    double nx = x.norm();
    double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) {
        fail(ErrorCode::ZeroNorm, "cosine_distance of a zero vector");
    }
    double d = 1.0 - x.dot(y) / (nx * ny);
    return std::clamp(d, 0.0, 2.0);
}

double squared_euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         const Eigen::Ref<const Eigen::RowVectorXd>& y) {
    return (x - y).squaredNorm();
}

ReductionResult PcaReducer::reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec) const {
    matrix.validate();
    require(!matrix.reduced, "matrix '" + matrix.model_name + "' is already reduced");
    const auto n = matrix.vectors.rows();
    const auto d = matrix.vectors.cols();
    const auto target = static_cast<Eigen::Index>(spec.target_dimension);
    require(target >= 1, "target_dimension must be positive");
    require(target <= d, "target_dimension " + std::to_string(target) +
                             " exceeds input dimension " + std::to_string(d));
    require(n >= target && n >= 2, "reduce needs at least target_dimension rows (and two)");

    ReductionResult result;
    result.mean = matrix.vectors.colwise().mean();
    RowMatrix centered = matrix.vectors.rowwise() - result.mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        fail(ErrorCode::NonFinite, "covariance eigendecomposition failed");
    }
    // Eigen sorts ascending; walk from the back.
    const Eigen::VectorXd& values = solver.eigenvalues();
    const Eigen::MatrixXd& vectors = solver.eigenvectors();
    double largest = std::max(values(d - 1), 0.0);
    double tolerance = largest * 1e-10 * static_cast<double>(d);
    Eigen::Index informative = 0;
    for (Eigen::Index i = d - 1; i >= 0 && values(i) > tolerance; --i) {
        ++informative;
    }
    if (informative == 0) {
        fail(ErrorCode::RankDeficient, "all rows are identical; nothing to project");
    }
    Eigen::Index kept = std::min(target, informative);
    if (kept < target) {
        result.rank_deficient = true;
        result.warning = "RankDeficient: only " + std::to_string(informative) +
                         " informative dimensions, " + std::to_string(target) + " requested";
    }

    result.components.resize(kept, d);
    for (Eigen::Index c = 0; c < kept; ++c) {
        Eigen::VectorXd axis = vectors.col(d - 1 - c);
        Eigen::Index pivot = 0;
        for (Eigen::Index j = 1; j < d; ++j) {
            if (std::abs(axis(j)) > std::abs(axis(pivot))) {
                pivot = j;
            }
        }
        if (axis(pivot) < 0.0) {
            axis = -axis;
        }
        result.components.row(c) = axis.transpose();
        result.explained_variance.push_back(values(d - 1 - c));
    }

    result.matrix.record_ids = matrix.record_ids;
    result.matrix.model_name = matrix.model_name;
    result.matrix.reduced = true;
    result.matrix.vectors = centered * result.components.transpose();
    return result;
}

ReductionResult ExternalReducer::reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec) const {
    matrix.validate();
    pre_reduced_.validate();
    require(!matrix.reduced, "matrix '" + matrix.model_name + "' is already reduced");
    require(pre_reduced_.record_ids == matrix.record_ids,
            "external reduction rows do not match the raw matrix");
    if (pre_reduced_.dimension() != spec.target_dimension) {
        fail(ErrorCode::DimensionMismatch,
             "external reduction has dimension " + std::to_string(pre_reduced_.dimension()) +
                 ", expected " + std::to_string(spec.target_dimension));
    }
    ReductionResult result;
    result.matrix = pre_reduced_;
    result.matrix.model_name = matrix.model_name;
    result.matrix.reduced = true;
    result.mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(pre_reduced_.dimension()));
    return result;
}

ReductionResult reduce(const EmbeddingMatrix& matrix, const ReducerSpec& spec) {
    require(spec.method == ReducerMethod::pca,
            "external reductions go through ExternalReducer with the pre-reduced matrix");
    return PcaReducer{}.reduce(matrix, spec);
}

// --- k-means ---------------------------------------------------------------

std::size_t nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& point,
                             const RowMatrix& centroids) {
    std::size_t best = 0;
    double best_d = squared_euclidean(point, centroids.row(0));
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
        double dist = squared_euclidean(point, centroids.row(c));
        if (dist < best_d) {
            best_d = dist;
            best = static_cast<std::size_t>(c);
        }
    }
    return best;
}

double inertia_of(const RowMatrix& points, const std::vector<std::size_t>& assignments,
                  const RowMatrix& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        total += squared_euclidean(points.row(i),
                                   centroids.row(static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)])));
    }
    return total;
}

namespace {

RowMatrix seed_plus_plus(const RowMatrix& points, std::size_t k, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(points.rows());
    SplitMix64 rng(seed);
    std::vector<std::size_t> chosen;
    std::vector<bool> taken(n, false);
    chosen.push_back(static_cast<std::size_t>(rng.below(n)));
    taken[chosen.back()] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_euclidean(points.row(static_cast<Eigen::Index>(i)),
                                  points.row(static_cast<Eigen::Index>(chosen[0])));
    }
    while (chosen.size() < k) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) {
                    continue;
                }
                cumulative += d2[i];
                pick = i;
                if (cumulative > r) {
                    break;
                }
            }
        }
        if (pick == n) {
            // Fewer distinct points than k: fall back to the first unused row.
            pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), false) - taken.begin());
        }
        chosen.push_back(pick);
        taken[pick] = true;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_euclidean(points.row(static_cast<Eigen::Index>(i)),
                                                      points.row(static_cast<Eigen::Index>(pick))));
        }
    }
    RowMatrix centroids(static_cast<Eigen::Index>(k), points.cols());
    for (std::size_t c = 0; c < k; ++c) {
        centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(chosen[c]));
    }
    return centroids;
}

void repair_empty_clusters(const RowMatrix& points, std::vector<std::size_t>& assignments,
                           RowMatrix& centroids) {
    const auto k = static_cast<std::size_t>(centroids.rows());
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) {
        ++sizes[a];
    }
    for (std::size_t empty = 0; empty < k; ++empty) {
        if (sizes[empty] != 0) {
            continue;
        }
        std::size_t farthest = assignments.size();
        double farthest_d = -1.0;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (sizes[assignments[i]] < 2) {
                continue;
            }
            double d = squared_euclidean(points.row(static_cast<Eigen::Index>(i)),
                                         centroids.row(static_cast<Eigen::Index>(assignments[i])));
            if (d > farthest_d) {
                farthest_d = d;
                farthest = i;
            }
        }
        if (farthest == assignments.size()) {
            continue;
        }
        --sizes[assignments[farthest]];
        assignments[farthest] = empty;
        ++sizes[empty];
        centroids.row(static_cast<Eigen::Index>(empty)) = points.row(static_cast<Eigen::Index>(farthest));
    }
}

RowMatrix cluster_means(const RowMatrix& points, const std::vector<std::size_t>& assignments,
                        const RowMatrix& previous) {
    RowMatrix sums = RowMatrix::Zero(previous.rows(), previous.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(previous.rows()), 0);
    // Fixed summation order keeps results bit-identical across runs.
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        sums.row(static_cast<Eigen::Index>(assignments[i])) += points.row(static_cast<Eigen::Index>(i));
        ++counts[assignments[i]];
    }
    RowMatrix means = previous;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) {
            means.row(static_cast<Eigen::Index>(c)) =
                sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        }
    }
    return means;
}

// One sweep of single-point transfers at a Lloyd fixed point: moves a point
// when the exact change in total inertia is negative. Centroids must be the
// cluster means on entry and are recomputed on exit.
bool transfer_pass(const RowMatrix& points, std::vector<std::size_t>& assignments,
                   RowMatrix& centroids) {
    const auto k = static_cast<std::size_t>(centroids.rows());
    std::vector<std::size_t> counts(k, 0);
    for (auto a : assignments) {
        ++counts[a];
    }
    bool moved = false;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const auto row = points.row(static_cast<Eigen::Index>(i));
        std::size_t from = assignments[i];
        if (counts[from] < 2) {
            continue;
        }
        double na = static_cast<double>(counts[from]);
        double removal = na / (na - 1.0) * squared_euclidean(row, centroids.row(static_cast<Eigen::Index>(from)));
        std::size_t to = from;
        double best_gain = 1e-12 * std::max(1.0, removal);
        for (std::size_t c = 0; c < k; ++c) {
            if (c == from) {
                continue;
            }
            double nb = static_cast<double>(counts[c]);
            double gain = removal - nb / (nb + 1.0) * squared_euclidean(row, centroids.row(static_cast<Eigen::Index>(c)));
            if (gain > best_gain) {
                best_gain = gain;
                to = c;
            }
        }
        if (to == from) {
            continue;
        }
        auto ef = static_cast<Eigen::Index>(from);
        auto et = static_cast<Eigen::Index>(to);
        double nt = static_cast<double>(counts[to]);
        centroids.row(ef) = (centroids.row(ef) * na - row) / (na - 1.0);
        centroids.row(et) = (centroids.row(et) * nt + row) / (nt + 1.0);
        --counts[from];
        ++counts[to];
        assignments[i] = to;
        moved = true;
    }
    if (moved) {
        centroids = cluster_means(points, assignments, centroids);
    }
    return moved;
}

}  // namespace

KMeansResult kmeans(const RowMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters) {
    const auto n = static_cast<std::size_t>(points.rows());
    require(k >= 1, "k must be at least 1");
    if (k > n) {
        fail(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
    }
    require(max_iters >= 1, "max_iters must be at least 1");
    if (!points.allFinite()) {
        fail(ErrorCode::NonFinite, "k-means input contains non-finite values");
    }

    KMeansResult result;
    RowMatrix centroids = seed_plus_plus(points, k, seed);
    std::vector<std::size_t> previous;
    std::vector<std::size_t> assignments(n);
    for (std::size_t it = 1; it <= max_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            assignments[i] = nearest_centroid(points.row(static_cast<Eigen::Index>(i)), centroids);
        }
        repair_empty_clusters(points, assignments, centroids);
        result.iterations = it;
        if (assignments == previous) {
            if (!transfer_pass(points, assignments, centroids)) {
                result.converged = true;
                break;
            }
            result.inertia_history.push_back(inertia_of(points, assignments, centroids));
            previous = assignments;
            continue;
        }
        centroids = cluster_means(points, assignments, centroids);
        result.inertia_history.push_back(inertia_of(points, assignments, centroids));
        previous = assignments;
    }
    result.assignments = previous;
    result.centroids = std::move(centroids);
    result.inertia = result.inertia_history.back();
    return result;
}

KMeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters) {
    matrix.validate();
    return kmeans(matrix.vectors, k, seed, max_iters);
}

KMeansResult kmeans_best_of(const RowMatrix& points, std::size_t k,
                            const std::vector<std::uint64_t>& seeds, std::size_t max_iters) {
    require(!seeds.empty(), "kmeans_best_of needs at least one seed");
    KMeansResult best = kmeans(points, k, seeds.front(), max_iters);
    for (std::size_t s = 1; s < seeds.size(); ++s) {
        KMeansResult candidate = kmeans(points, k, seeds[s], max_iters);
        if (candidate.inertia < best.inertia) {
            best = std::move(candidate);
        }
    }
    return best;
}

}  // namespace annotkit
