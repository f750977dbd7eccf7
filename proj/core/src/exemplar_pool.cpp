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

#include "annotkit/exemplar_pool.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <set>

#include "annotkit/errors.hpp"
#include "annotkit/geometry.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;

std::string to_string(PoolStatus status) {
    switch (status) {
        case PoolStatus::selecting: return "selecting";
        case PoolStatus::awaiting_labels: return "awaiting_labels";
        case PoolStatus::labeled: return "labeled";
        case PoolStatus::verified: return "verified";
    }
    return "selecting";
}

PoolStatus pool_status_from_string(const std::string& text) {
    for (auto s : {PoolStatus::selecting, PoolStatus::awaiting_labels, PoolStatus::labeled,
                   PoolStatus::verified}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    fail(ErrorCode::ParseError, "unknown pool status '" + text + "'");
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool ExemplarPool::contains(std::string_view record_id) const {
    return std::find(pool_ids.begin(), pool_ids.end(), record_id) != pool_ids.end();
}

std::optional<std::string> ExemplarPool::label_of(std::string_view record_id) const {
    auto it = labeled.find(std::string(record_id));
    if (it == labeled.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ExemplarPool::validate() const {
    require(pool_ids.size() == M, "pool holds " + std::to_string(pool_ids.size()) + " ids, M = " +
                                      std::to_string(M));
    std::set<std::string> distinct(pool_ids.begin(), pool_ids.end());
    require(distinct.size() == pool_ids.size(), "pool ids are not distinct");
    for (const auto& [id, label] : labeled) {
        require(distinct.contains(id), "label for non-pool id '" + id + "'");
    }
    if (status == PoolStatus::labeled || status == PoolStatus::verified) {
        require(labeled.size() == M, "pool marked labeled with missing labels");
    }
}

ExemplarPool select_pool(const EmbeddingMatrix& reduced, std::size_t M, std::uint64_t seed,
                         std::size_t max_iters) {
    require(reduced.reduced, "pool selection runs on a reduced matrix");
    require(M >= 1, "pool size must be positive");
    if (M > reduced.rows()) {
        fail(ErrorCode::KTooLarge, "pool size " + std::to_string(M) + " exceeds " +
                                       std::to_string(reduced.rows()) + " records");
    }
    KMeansResult clusters = kmeans(reduced, M, seed, max_iters);

    ExemplarPool pool;
    pool.M = M;
    pool.selection_seed = seed;
    pool.assignments = clusters.assignments;
    pool.centroids = clusters.centroids;
    pool.member_rows.assign(M, reduced.rows());
    std::vector<double> best(M, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < reduced.rows(); ++i) {
        std::size_t c = clusters.assignments[i];
        double d = squared_euclidean(reduced.vectors.row(static_cast<Eigen::Index>(i)),
                                     clusters.centroids.row(static_cast<Eigen::Index>(c)));
        if (d < best[c]) {
            best[c] = d;
            pool.member_rows[c] = i;
        }
    }
    for (std::size_t c = 0; c < M; ++c) {
        require(pool.member_rows[c] < reduced.rows(), "cluster " + std::to_string(c) + " is empty");
        pool.pool_ids.push_back(reduced.record_ids[pool.member_rows[c]]);
    }
    if (M > kPoolSizeWarning) {
        pool.warnings.push_back("pool size " + std::to_string(M) + " exceeds " +
                                std::to_string(kPoolSizeWarning) +
                                "; labeling effort grows linearly with M");
    }
    pool.status = PoolStatus::awaiting_labels;
    pool.validate();
    return pool;
}

void record_label(ExemplarPool& pool, const LabelSchema& schema, const std::string& record_id,
                  const std::string& label, const std::string& annotator, std::string timestamp) {
    if (pool.status == PoolStatus::verified) {
        fail(ErrorCode::PoolSealed, "pool was sealed by " + pool.sealed_by + "; labels are final");
    }
    if (!pool.contains(record_id)) {
        fail(ErrorCode::NotInPool, "record '" + record_id + "' is not in the exemplar pool");
    }
    require(!annotator.empty(), "label needs an annotator identity");
    std::string canonical = schema.canonical(label);
    int version = 1;
    for (const auto& e : pool.history) {
        if (e.record_id == record_id) {
            version = e.version + 1;
        }
    }
    pool.history.push_back({record_id, canonical, annotator,
                            timestamp.empty() ? utc_timestamp() : std::move(timestamp), version});
    pool.labeled[record_id] = canonical;
    if (pool.labeled.size() == pool.M) {
        pool.status = PoolStatus::labeled;
    }
}

void seal_pool(ExemplarPool& pool, const std::string& actor) {
    require(!actor.empty(), "sealing the pool needs an actor identity");
    require(pool.status == PoolStatus::labeled || pool.status == PoolStatus::verified,
            "pool has " + std::to_string(pool.labeled.size()) + " of " + std::to_string(pool.M) +
                " labels");
    pool.status = PoolStatus::verified;
    pool.sealed_by = actor;
}

CoverageReport pool_coverage_report(const ExemplarPool& pool, const EmbeddingMatrix& reduced) {
    CoverageReport report;
    require(pool.assignments.size() == reduced.rows(), "coverage needs the selection matrix");
    for (std::size_t c = 0; c < pool.M; ++c) {
        ClusterCoverage cov;
        cov.exemplar_id = pool.pool_ids[c];
        cov.cluster = c;
        auto centroid = pool.centroids.row(static_cast<Eigen::Index>(c));
        for (std::size_t i = 0; i < reduced.rows(); ++i) {
            if (pool.assignments[i] != c) {
                continue;
            }
            ++cov.population;
            double d = std::sqrt(squared_euclidean(reduced.vectors.row(static_cast<Eigen::Index>(i)), centroid));
            cov.radius = std::max(cov.radius, d);
        }
        cov.exemplar_offset = std::sqrt(squared_euclidean(
            reduced.vectors.row(static_cast<Eigen::Index>(pool.member_rows[c])), centroid));
        report.clusters.push_back(cov);
    }
    for (const auto& [id, label] : pool.labeled) {
        ++report.class_histogram[label];
    }
    return report;
}

json to_json(const ExemplarPool& pool) {
    json j;
    j["pool_ids"] = pool.pool_ids;
    j["M"] = pool.M;
    j["selection_seed"] = pool.selection_seed;
    j["labeled"] = pool.labeled;
    j["status"] = to_string(pool.status);
    j["sealed_by"] = pool.sealed_by;
    json history = json::array();
    for (const auto& e : pool.history) {
        history.push_back({{"record_id", e.record_id},
                           {"label", e.label},
                           {"annotator", e.annotator},
                           {"timestamp", e.timestamp},
                           {"version", e.version}});
    }
    j["history"] = history;
    j["member_rows"] = pool.member_rows;
    j["assignments"] = pool.assignments;
    json centroids = json::array();
    for (Eigen::Index r = 0; r < pool.centroids.rows(); ++r) {
        std::vector<double> row(pool.centroids.row(r).begin(), pool.centroids.row(r).end());
        centroids.push_back(row);
    }
    j["centroids"] = centroids;
    j["warnings"] = pool.warnings;
    return j;
}

ExemplarPool pool_from_json(const json& j) {
    ExemplarPool pool;
    pool.pool_ids = j.at("pool_ids").get<std::vector<std::string>>();
    pool.M = j.at("M").get<std::size_t>();
    pool.selection_seed = j.at("selection_seed").get<std::uint64_t>();
    pool.labeled = j.at("labeled").get<std::map<std::string, std::string>>();
    pool.status = pool_status_from_string(j.at("status").get<std::string>());
    pool.sealed_by = j.value("sealed_by", "");
    for (const auto& e : j.at("history")) {
        pool.history.push_back({e.at("record_id").get<std::string>(), e.at("label").get<std::string>(),
                                e.at("annotator").get<std::string>(),
                                e.at("timestamp").get<std::string>(), e.at("version").get<int>()});
    }
    pool.member_rows = j.at("member_rows").get<std::vector<std::size_t>>();
    pool.assignments = j.at("assignments").get<std::vector<std::size_t>>();
    const auto& centroids = j.at("centroids");
    if (!centroids.empty()) {
        pool.centroids.resize(static_cast<Eigen::Index>(centroids.size()),
                              static_cast<Eigen::Index>(centroids[0].size()));
        for (std::size_t r = 0; r < centroids.size(); ++r) {
            for (std::size_t c = 0; c < centroids[r].size(); ++c) {
                pool.centroids(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    centroids[r][c].get<double>();
            }
        }
    }
    pool.warnings = j.value("warnings", std::vector<std::string>{});
    pool.validate();
    return pool;
}

std::string export_pool_csv(const ExemplarPool& pool, const Corpus& corpus) {
    std::string out = "record_id,text,label\n";
    for (const auto& id : pool.pool_ids) {
        out += csv_escape(id) + "," + csv_escape(corpus.record(id).text) + "," +
               csv_escape(pool.label_of(id).value_or("")) + "\n";
    }
    return out;
}

std::size_t import_pool_labels_csv(ExemplarPool& pool, const LabelSchema& schema,
                                   const std::string& csv, const std::string& annotator,
                                   const std::string& timestamp) {
    auto rows = parse_csv(csv);
    if (rows.empty()) {
        return 0;
    }
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
        column[casefold(trim(rows[0][i]))] = i;
    }
    if (!column.contains("record_id") || !column.contains("label")) {
        fail(ErrorCode::ParseError, "pool label CSV needs record_id and label columns");
    }
    std::size_t applied = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() <= std::max(column["record_id"], column["label"])) {
            fail(ErrorCode::ParseError, "line " + std::to_string(r + 1) + ": too few columns");
        }
        std::string label = trim(row[column["label"]]);
        if (label.empty()) {
            continue;
        }
        record_label(pool, schema, trim(row[column["record_id"]]), label, annotator, timestamp);
        ++applied;
    }
    return applied;
}

}  // namespace annotkit
