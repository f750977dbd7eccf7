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

#include "annotkit/retrieval.hpp"
#include "annotkit/text_util.hpp"

using namespace annotkit;

namespace {

std::vector<MmrCandidate> random_candidates(std::size_t n, std::size_t dim, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<MmrCandidate> out;
    for (std::size_t i = 0; i < n; ++i) {
        MmrCandidate c;
        c.record_id = "p" + std::to_string(i);
        c.row = i;
        c.vector.resize(static_cast<Eigen::Index>(dim));
        for (Eigen::Index j = 0; j < c.vector.size(); ++j) {
            c.vector(j) = rng.gaussian();
        }
        c.label = i % 2 == 0 ? "approve" : "oppose";
        out.push_back(std::move(c));
    }
    return out;
}

void BM_MmrTrace(benchmark::State& state) {
    auto pool = random_candidates(static_cast<std::size_t>(state.range(0)), 24, 4);
    Eigen::RowVectorXd query = pool.front().vector * 0.5;
    MmrConfig config;
    config.k = 8;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mmr_trace(query, pool, config));
    }
}
BENCHMARK(BM_MmrTrace)->Arg(80)->Arg(400);

}  // namespace
