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


#include <doctest.h>

#include <cmath>

#include "annotkit/errors.hpp"
#include "annotkit/geometry.hpp"
#include "annotkit/text_util.hpp"
#include "support/oracles.hpp"

using namespace annotkit;

namespace {

RowMatrix random_rows(SplitMix64& rng, std::size_t n, std::size_t d) {
    RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.gaussian();
    return m;
}

EmbeddingMatrix as_matrix(const RowMatrix& rows, bool reduced = false) {
    EmbeddingMatrix m;
    m.model_name = "test";
    m.reduced = reduced;
    m.vectors = rows;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) m.record_ids.push_back("r" + std::to_string(i));
    return m;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an annotkit::Error");
    return ErrorCode::ConfigError;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("cosine distance fixed points") {
    std::vector<double> a{1, 0}, b{0, 2}, c{-3, 0}, z{0, 0};
    CHECK(cosine_distance(a, a) == doctest::Approx(0.0));
    CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
    CHECK(cosine_distance(a, c) == doctest::Approx(2.0));
    CHECK(code_of([&] { cosine_distance(a, z); }) == ErrorCode::ZeroNorm);
    std::vector<double> three{1, 2, 3};
    CHECK(code_of([&] { cosine_distance(a, three); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("cosine distance is symmetric, bounded and scale invariant") {
    SplitMix64 rng(5);
    for (int t = 0; t < 200; ++t) {
        std::size_t d = 1 + rng.below(6);
        RowMatrix m = random_rows(rng, 2, d);
        double dxy = cosine_distance(m.row(0), m.row(1));
        CHECK(dxy == doctest::Approx(cosine_distance(m.row(1), m.row(0))));
        CHECK(dxy >= 0.0);
        CHECK(dxy <= 2.0);
        Eigen::RowVectorXd scaled = m.row(0) * (0.5 + rng.uniform() * 10);
        CHECK(cosine_distance(scaled, m.row(1)) == doctest::Approx(dxy).epsilon(1e-12));
    }
}

TEST_CASE("pca matches an independent eigensolver and has orthonormal axes") {
    SplitMix64 rng(17);
    for (int t = 0; t < 10; ++t) {
        std::size_t d = 2 + rng.below(6);
        std::size_t n = d + 3 + rng.below(20);
        RowMatrix x = random_rows(rng, n, d);
        std::size_t m = 1 + rng.below(d);
        auto r = reduce(as_matrix(x), {ReducerMethod::pca, m, 0});
        oracle::Mat rows(n, oracle::Vec(d));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) rows[i][j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        auto eig = oracle::jacobi_eigenvalues(oracle::sample_covariance(rows));
        REQUIRE(r.explained_variance.size() == m);
        for (std::size_t c = 0; c < m; ++c) CHECK(r.explained_variance[c] == doctest::Approx(eig[c]).epsilon(1e-10));
        Eigen::MatrixXd gram = r.components * r.components.transpose();
        CHECK((gram - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m))).cwiseAbs().maxCoeff() < 1e-10);
        for (Eigen::Index c = 0; c < r.components.rows(); ++c) {
            Eigen::Index pivot;
            r.components.row(c).cwiseAbs().maxCoeff(&pivot);
            CHECK(r.components(c, pivot) > 0.0);
        }
        CHECK(r.matrix.reduced);
        CHECK(r.matrix.record_ids == as_matrix(x).record_ids);
        CHECK_FALSE(r.rank_deficient);
        auto again = reduce(as_matrix(x), {ReducerMethod::pca, m, 0});
        CHECK(again.matrix.vectors == r.matrix.vectors);
    }
}

TEST_CASE("pca on collinear data keeps only informative directions") {
    RowMatrix x(5, 2);
    for (int i = 0; i < 5; ++i) {
        x(i, 0) = i;
        x(i, 1) = 2.0 * i;
    }
    auto r = reduce(as_matrix(x), {ReducerMethod::pca, 2, 0});
    CHECK(r.rank_deficient);
    CHECK(r.matrix.dimension() == 1);
    CHECK(r.warning.find("RankDeficient") == 0);
    CHECK(r.explained_variance[0] == doctest::Approx(2.5 * 5.0));

    RowMatrix same = RowMatrix::Constant(4, 3, 1.5);
    CHECK(code_of([&] { reduce(as_matrix(same), {ReducerMethod::pca, 2, 0}); }) == ErrorCode::RankDeficient);
    CHECK(code_of([&] { reduce(as_matrix(x), {ReducerMethod::pca, 3, 0}); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("external reducer checks shape and ids") {
    SplitMix64 rng(2);
    auto raw = as_matrix(random_rows(rng, 6, 5));
    auto pre = as_matrix(random_rows(rng, 6, 2), true);
    ExternalReducer ext(pre);
    auto r = ext.reduce(raw, {ReducerMethod::external, 2, 0});
    CHECK(r.matrix.vectors == pre.vectors);
    CHECK(r.matrix.reduced);
    CHECK(code_of([&] { ext.reduce(raw, {ReducerMethod::external, 3, 0}); }) == ErrorCode::DimensionMismatch);
    auto other = pre;
    other.record_ids[0] = "x";
    CHECK(code_of([&] { ExternalReducer(other).reduce(raw, {ReducerMethod::external, 2, 0}); }) ==
          ErrorCode::PreconditionViolation);
}

TEST_CASE("k-means ends at a Lloyd fixed point with non-increasing inertia") {
    SplitMix64 rng(99);
    for (int t = 0; t < 200; ++t) {
        std::size_t k = 1 + rng.below(5);
        std::size_t n = k + rng.below(30);
        std::size_t d = 1 + rng.below(4);
        RowMatrix x = random_rows(rng, n, d);
        auto r = kmeans(x, k, rng.next());
        REQUIRE(r.assignments.size() == n);
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-12);
        }
        CHECK(r.converged);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[r.assignments[i]];
            CHECK(nearest_centroid(x.row(static_cast<Eigen::Index>(i)), r.centroids) == r.assignments[i]);
        }
        for (auto c : counts) CHECK(c > 0);
        CHECK(r.inertia == doctest::Approx(inertia_of(x, r.assignments, r.centroids)));
    }
}

TEST_CASE("k-means is deterministic per seed and handles duplicates") {
    SplitMix64 rng(3);
    RowMatrix x = random_rows(rng, 40, 3);
    auto a = kmeans(x, 4, 11);
    auto b = kmeans(x, 4, 11);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);

    RowMatrix dup = RowMatrix::Constant(5, 2, 0.25);
    auto r = kmeans(dup, 2, 0);
    std::vector<std::size_t> counts(2, 0);
    for (auto c : r.assignments) ++counts[c];
    CHECK(counts[0] > 0);
    CHECK(counts[1] > 0);
    CHECK(r.inertia == doctest::Approx(0.0));

    CHECK(kmeans(x, 40, 1).inertia == doctest::Approx(0.0));
    CHECK(code_of([&] { kmeans(x, 41, 1); }) == ErrorCode::KTooLarge);
    RowMatrix bad = x;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK(code_of([&] { kmeans(bad, 2, 1); }) == ErrorCode::NonFinite);
}

TEST_CASE("best-of keeps the lowest inertia") {
    SplitMix64 rng(8);
    RowMatrix x = random_rows(rng, 30, 2);
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    auto best = kmeans_best_of(x, 3, seeds);
    for (auto s : seeds) CHECK(best.inertia <= kmeans(x, 3, s).inertia);
}

}
