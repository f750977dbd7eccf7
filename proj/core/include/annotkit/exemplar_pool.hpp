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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "annotkit/corpus_store.hpp"

namespace annotkit {

enum class PoolStatus { selecting, awaiting_labels, labeled, verified };

std::string to_string(PoolStatus status);
PoolStatus pool_status_from_string(const std::string& text);

struct LabelEvent {
    std::string record_id;
    std::string label;
    std::string annotator;
    std::string timestamp;
    /// 1 for the first label of an id, incremented on each relabel.
    int version = 1;
};

/// The M representative records handed to a human for labeling.
struct ExemplarPool {
    std::vector<std::string> pool_ids;
    std::size_t M = 0;
    std::uint64_t selection_seed = 0;
    std::map<std::string, std::string> labeled;
    PoolStatus status = PoolStatus::selecting;
    std::vector<LabelEvent> history;
    std::string sealed_by;

    // Selection detail, kept for coverage reporting.
    std::vector<std::size_t> member_rows;   // matrix row of each exemplar, pool order
    std::vector<std::size_t> assignments;   // cluster of each matrix row
    RowMatrix centroids;
    std::vector<std::string> warnings;

    bool contains(std::string_view record_id) const;
    std::optional<std::string> label_of(std::string_view record_id) const;
    /// Checks the structural invariants; throws PreconditionViolation.
    void validate() const;
};

inline constexpr std::size_t kDefaultPoolSize = 80;
inline constexpr std::size_t kPoolSizeWarning = 100;

/// k-means with k = M on the reduced matrix, then the member nearest each
/// centroid (ties to the lower row). Pool order follows cluster index.
ExemplarPool select_pool(const EmbeddingMatrix& reduced, std::size_t M, std::uint64_t seed,
                         std::size_t max_iters = 300);

/// Stores a versioned label. Completing all M labels moves the pool to
/// `labeled`. Throws NotInPool, UnknownLabel, PoolSealed.
void record_label(ExemplarPool& pool, const LabelSchema& schema, const std::string& record_id,
                  const std::string& label, const std::string& annotator,
                  std::string timestamp = {});

/// Human verification; required before prompt generation.
void seal_pool(ExemplarPool& pool, const std::string& actor);

struct ClusterCoverage {
    std::string exemplar_id;
    std::size_t cluster = 0;
    std::size_t population = 0;
    /// Max distance from the centroid to any member.
    double radius = 0.0;
    /// Distance from the centroid to the chosen exemplar.
    double exemplar_offset = 0.0;
};

struct CoverageReport {
    std::vector<ClusterCoverage> clusters;
    std::map<std::string, std::size_t> class_histogram;
};

CoverageReport pool_coverage_report(const ExemplarPool& pool, const EmbeddingMatrix& reduced);

nlohmann::json to_json(const ExemplarPool& pool);
ExemplarPool pool_from_json(const nlohmann::json& j);

/// record_id,text,label
std::string export_pool_csv(const ExemplarPool& pool, const Corpus& corpus);
/// Applies every non-empty label row through record_label. Returns the count.
std::size_t import_pool_labels_csv(ExemplarPool& pool, const LabelSchema& schema,
                                   const std::string& csv, const std::string& annotator,
                                   const std::string& timestamp = {});

std::string utc_timestamp();

}  // namespace annotkit
