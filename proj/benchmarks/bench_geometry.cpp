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

#include <benchmark/benchmark.h>

#include "annotkit/geometry.hpp"
#include "annotkit/text_util.hpp"

using namespace annotkit;

namespace {

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    SplitMix64 rng(seed);
    EmbeddingMatrix m;
    m.model_name = "bench";
    m.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < m.vectors.rows(); ++i) {
        m.record_ids.push_back("r" + std::to_string(i));
        for (Eigen::Index j = 0; j < m.vectors.cols(); ++j) {
            m.vectors(i, j) = rng.gaussian();
        }
    }
    return m;
}

void BM_Pca(benchmark::State& state) {
    auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 256, 1);
    ReducerSpec spec;
    spec.target_dimension = 24;
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduce(m, spec));
    }
}
BENCHMARK(BM_Pca)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 24, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmeans(m.vectors, 80, 7));
    }
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_CosineDistance(benchmark::State& state) {
    auto m = random_matrix(2, static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cosine_distance(m.vectors.row(0), m.vectors.row(1)));
    }
}
BENCHMARK(BM_CosineDistance)->Arg(24)->Arg(1536);

}  // namespace
