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

// Reference implementations written from the definitions, sharing no code
// with the library. Plain std::vector math throughout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double cosine_similarity(const Vec& a, const Vec& b) {
    return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
}

inline double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// Greedy MMR recomputed from scratch at every step: each round scores all
/// remaining items against the full selected set.
inline std::vector<std::size_t> mmr_greedy(const Vec& query, const Mat& pool, double lambda,
                                           std::size_t k) {
    std::vector<std::size_t> chosen;
    std::vector<bool> used(pool.size(), false);
    for (std::size_t step = 0; step < k; ++step) {
        std::optional<std::size_t> best;
        double best_score = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            double rel = cosine_similarity(query, pool[i]);
            double red = 0.0;
            for (std::size_t s = 0; s < chosen.size(); ++s) {
                double sim = cosine_similarity(pool[i], pool[chosen[s]]);
                red = s == 0 ? sim : std::max(red, sim);
            }
            double score = lambda * rel - (1.0 - lambda) * red;
            if (!best || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        used[*best] = true;
        chosen.push_back(*best);
    }
    return chosen;
}

/// Indices of the k most query-similar items; ties to the lower index.
inline std::vector<std::size_t> top_k_similar(const Vec& query, const Mat& pool, std::size_t k) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return cosine_similarity(query, pool[a]) > cosine_similarity(query, pool[b]);
    });
    idx.resize(k);
    return idx;
}

/// Sum of squared distances to cluster means for an assignment.
inline double partition_inertia(const Mat& points, const std::vector<std::size_t>& assign,
                                std::size_t k) {
    std::size_t d = points.front().size();
    Mat sums(k, Vec(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        ++counts[assign[i]];
        for (std::size_t j = 0; j < d; ++j) sums[assign[i]][j] += points[i][j];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec mean(d);
        for (std::size_t j = 0; j < d; ++j) mean[j] = sums[assign[i]][j] / static_cast<double>(counts[assign[i]]);
        total += sq_dist(points[i], mean);
    }
    return total;
}

/// Global k-means optimum by enumerating every assignment with k non-empty
/// clusters (k^n; meant for n ≤ 8, k ≤ 3).
inline double kmeans_global_optimum(const Mat& points, std::size_t k) {
    std::size_t n = points.size();
    std::vector<std::size_t> assign(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<bool> seen(k, false);
        for (auto a : assign) seen[a] = true;
        if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
            best = std::min(best, partition_inertia(points, assign, k));
        }
        std::size_t pos = 0;
        while (pos < n && ++assign[pos] == k) {
            assign[pos] = 0;
            ++pos;
        }
        if (pos == n) break;
    }
    return best;
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix. Returns the
/// eigenvalues sorted in descending order.
inline Vec jacobi_eigenvalues(Mat a) {
    std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    double arp = a[r][p];
                    double arq = a[r][q];
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    double apr = a[p][r];
                    double aqr = a[q][r];
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
        }
    }
    Vec eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    std::sort(eig.rbegin(), eig.rend());
    return eig;
}

/// Sample covariance with the n - 1 denominator.
inline Mat sample_covariance(const Mat& x) {
    std::size_t n = x.size();
    std::size_t d = x.front().size();
    Vec mean(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j] / static_cast<double>(n);
    Mat cov(d, Vec(d, 0.0));
    for (const auto& row : x)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
    for (auto& r : cov)
        for (auto& v : r) v /= static_cast<double>(n - 1);
    return cov;
}

/// Monte Carlo estimate of final accuracy under the two-annotator + judge
/// protocol with binary labels: independent annotators of accuracy p agree
/// or go to a judge that picks the truth with probability q.
inline double consensus_accuracy_mc(double p, double q, std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution a(p), b(p), judge(q);
    std::size_t correct = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        bool ra = a(gen);
        bool rb = b(gen);
        if (ra == rb) {
            correct += ra ? 1 : 0;
        } else {
            correct += judge(gen) ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(trials);
}

/// Upper tail P(Z > z) for z >= 0 by Simpson integration of the density
/// over [z, z + 40]; accurate far into the tail, unlike 1 - CDF.
inline double normal_upper_tail(double z) {
    const double pi = std::acos(-1.0);
    const int n = 400000;
    const double h = 40.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        double x = z + h * i;
        double f = std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi);
        s += (i == 0 || i == n) ? f : (i % 2 ? 4.0 * f : 2.0 * f);
    }
    return s * h / 3.0;
}

/// Fisher z two-sided p-value from the textbook formula.
inline double fisher_p(double r1, double n1, double r2, double n2) {
    double z1 = 0.5 * std::log((1 + r1) / (1 - r1));
    double z2 = 0.5 * std::log((1 + r2) / (1 - r2));
    double z = (z1 - z2) / std::sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3));
    return 2.0 * normal_upper_tail(std::fabs(z));
}

}  // namespace oracle
