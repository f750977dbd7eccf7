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

#include <map>
#include <string>
#include <vector>

namespace annotkit {

/// record_id → class name.
using Labeling = std::map<std::string, std::string>;

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    bool operator==(const ClassCounts&) const = default;
};

struct ConfusionTable {
    std::vector<std::string> classes;
    std::map<std::string, ClassCounts> counts;
    std::size_t total = 0;
};

/// One-vs-rest counts. Throws CoverageMismatch unless both cover the same ids.
ConfusionTable confusion(const Labeling& pred, const Labeling& gold,
                         const std::vector<std::string>& classes);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    /// Some ratio was 0/0 and was reported as 0.
    bool degenerate = false;
    /// Never predicted and never present; left out of the macro averages.
    bool absent = false;
};

struct PrfReport {
    /// Table order.
    std::vector<std::string> classes;
    std::map<std::string, ClassScores> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<std::string> excluded_from_macro;
    std::size_t total = 0;
};

PrfReport prf1(const ConfusionTable& table);

/// record_id → 0/1.
struct BinaryCoding {
    std::map<std::string, int> values;
    std::string positive_class;
};

BinaryCoding binary_coding(const Labeling& labels, const std::string& positive_class);

/// Sample Pearson r. Throws CoverageMismatch or ConstantVector.
double pearson(const BinaryCoding& x, const BinaryCoding& y);
/// Throws CoverageMismatch or BothEmpty.
double jaccard(const BinaryCoding& x, const BinaryCoding& y);

/// Two-sided p-value of the Fisher z test for r1 (n1 pairs) vs r2 (n2 pairs).
/// Throws DegenerateR when n ≤ 3 or |r| ≥ 1.
double correlation_delta_test(double r1, std::size_t n1, double r2, std::size_t n2);

nlohmann::json to_json(const PrfReport& report);
PrfReport prf_report_from_json(const nlohmann::json& j);
/// Rows of class, precision, recall, f1, support; scores in percent.
std::string format_table(const PrfReport& report, const std::string& title = {});

}  // namespace annotkit
