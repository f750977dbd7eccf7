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

#include "annotkit/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "annotkit/errors.hpp"

namespace annotkit {

namespace {

void check_same_ids(const std::map<std::string, int>& x, const std::map<std::string, int>& y) {
    if (x.size() != y.size()) {
        fail(ErrorCode::CoverageMismatch, "codings cover " + std::to_string(x.size()) + " and " +
                                              std::to_string(y.size()) + " records");
    }
    for (auto a = x.begin(), b = y.begin(); a != x.end(); ++a, ++b) {
        if (a->first != b->first) {
            fail(ErrorCode::CoverageMismatch, "record '" + a->first + "' is missing from one coding");
        }
    }
}

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
    if (den == 0) {
        degenerate = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionTable confusion(const Labeling& pred, const Labeling& gold,
                         const std::vector<std::string>& classes) {
    require(!classes.empty(), "confusion needs at least one class");
    if (pred.size() != gold.size()) {
        fail(ErrorCode::CoverageMismatch, "prediction covers " + std::to_string(pred.size()) +
                                              " records, gold covers " + std::to_string(gold.size()));
    }
    ConfusionTable t;
    t.classes = classes;
    for (const auto& c : classes) {
        t.counts[c] = {};
    }
    for (auto p = pred.begin(), g = gold.begin(); p != pred.end(); ++p, ++g) {
        if (p->first != g->first) {
            fail(ErrorCode::CoverageMismatch, "record '" + p->first + "' has no gold label");
        }
        for (const auto& c : classes) {
            bool predicted = p->second == c;
            bool actual = g->second == c;
            auto& k = t.counts[c];
            if (predicted && actual) {
                ++k.tp;
            } else if (predicted) {
                ++k.fp;
            } else if (actual) {
                ++k.fn;
            } else {
                ++k.tn;
            }
        }
        ++t.total;
    }
    return t;
}

PrfReport prf1(const ConfusionTable& table) {
    require(table.total > 0, "prf1 needs a non-empty table");
    PrfReport r;
    r.total = table.total;
    r.classes = table.classes;
    std::size_t correct = 0;
    std::size_t included = 0;
    for (const auto& c : table.classes) {
        const auto& k = table.counts.at(c);
        ClassScores s;
        s.support = k.tp + k.fn;
        s.precision = ratio(k.tp, k.tp + k.fp, s.degenerate);
        s.recall = ratio(k.tp, k.tp + k.fn, s.degenerate);
        double pr = s.precision + s.recall;
        if (pr > 0.0) {
            s.f1 = 2.0 * s.precision * s.recall / pr;
        } else {
            s.f1 = 0.0;
            s.degenerate = true;
        }
        s.absent = k.tp + k.fp + k.fn == 0;
        correct += k.tp;
        if (s.absent) {
            r.excluded_from_macro.push_back(c);
        } else {
            r.macro_precision += s.precision;
            r.macro_recall += s.recall;
            r.macro_f1 += s.f1;
            ++included;
        }
        r.per_class[c] = s;
    }
    if (included > 0) {
        r.macro_precision /= static_cast<double>(included);
        r.macro_recall /= static_cast<double>(included);
        r.macro_f1 /= static_cast<double>(included);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(table.total);
    return r;
}

BinaryCoding binary_coding(const Labeling& labels, const std::string& positive_class) {
    BinaryCoding out;
    out.positive_class = positive_class;
    for (const auto& [id, label] : labels) {
        out.values[id] = label == positive_class ? 1 : 0;
    }
    return out;
}

double pearson(const BinaryCoding& x, const BinaryCoding& y) {
    check_same_ids(x.values, y.values);
    // Integer sums keep the identities (r = ±1, 0) exact.
    long long n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (auto a = x.values.begin(), b = y.values.begin(); a != x.values.end(); ++a, ++b) {
        long long xi = a->second;
        long long yi = b->second;
        require((xi == 0 || xi == 1) && (yi == 0 || yi == 1), "binary codings must be 0/1");
        ++n;
        sx += xi;
        sy += yi;
        sxx += xi * xi;
        syy += yi * yi;
        sxy += xi * yi;
    }
    long long vx = n * sxx - sx * sx;
    long long vy = n * syy - sy * sy;
    if (vx == 0 || vy == 0) {
        fail(ErrorCode::ConstantVector, "pearson r is undefined for a constant coding");
    }
    long long cov = n * sxy - sx * sy;
    if (cov == 0) {
        return 0.0;
    }
    if (cov * cov == vx * vy) {
        return cov > 0 ? 1.0 : -1.0;
    }
    return static_cast<double>(cov) /
           std::sqrt(static_cast<double>(vx) * static_cast<double>(vy));
}

double jaccard(const BinaryCoding& x, const BinaryCoding& y) {
    check_same_ids(x.values, y.values);
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (auto a = x.values.begin(), b = y.values.begin(); a != x.values.end(); ++a, ++b) {
        bool xa = a->second == 1;
        bool yb = b->second == 1;
        inter += xa && yb ? 1 : 0;
        uni += xa || yb ? 1 : 0;
    }
    if (uni == 0) {
        fail(ErrorCode::BothEmpty, "jaccard is undefined when neither coding has positives");
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double correlation_delta_test(double r1, std::size_t n1, double r2, std::size_t n2) {
    if (n1 <= 3 || n2 <= 3) {
        fail(ErrorCode::DegenerateR, "Fisher z test needs more than 3 pairs per sample");
    }
    if (!(std::fabs(r1) < 1.0) || !(std::fabs(r2) < 1.0)) {
        fail(ErrorCode::DegenerateR, "Fisher z test needs |r| < 1");
    }
    double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    double z = (std::atanh(r1) - std::atanh(r2)) / se;
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

nlohmann::json to_json(const PrfReport& report) {
    nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
    for (const auto& cls : report.classes) {
        const auto& s = report.per_class.at(cls);
        per_class[cls] = {{"precision", s.precision},
                          {"recall", s.recall},
                          {"f1", s.f1},
                          {"support", s.support},
                          {"degenerate", s.degenerate},
                          {"absent", s.absent}};
    }
    nlohmann::ordered_json j;
    j["total"] = report.total;
    j["accuracy"] = report.accuracy;
    j["macro_precision"] = report.macro_precision;
    j["macro_recall"] = report.macro_recall;
    j["macro_f1"] = report.macro_f1;
    j["excluded_from_macro"] = report.excluded_from_macro;
    j["per_class"] = per_class;
    j["classes"] = report.classes;
    return nlohmann::json::parse(j.dump());
}

PrfReport prf_report_from_json(const nlohmann::json& j) {
    PrfReport r;
    r.total = j.at("total").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro_precision").get<double>();
    r.macro_recall = j.at("macro_recall").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.excluded_from_macro = j.at("excluded_from_macro").get<std::vector<std::string>>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& cls : r.classes) {
        const auto& c = j.at("per_class").at(cls);
        ClassScores s;
        s.precision = c.at("precision").get<double>();
        s.recall = c.at("recall").get<double>();
        s.f1 = c.at("f1").get<double>();
        s.support = c.at("support").get<std::size_t>();
        s.degenerate = c.at("degenerate").get<bool>();
        s.absent = c.at("absent").get<bool>();
        r.per_class[cls] = s;
    }
    return r;
}

std::string format_table(const PrfReport& report, const std::string& title) {
    std::string out;
    if (!title.empty()) {
        out += title + "\n";
    }
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %10s %10s %10s %8s\n", "class", "precision", "recall",
                  "f1", "support");
    out += line;
    for (const auto& cls : report.classes) {
        const auto& s = report.per_class.at(cls);
        std::snprintf(line, sizeof line, "%-20s %10.2f %10.2f %10.2f %8zu%s\n", cls.c_str(),
                      100.0 * s.precision, 100.0 * s.recall, 100.0 * s.f1, s.support,
                      s.absent ? "  (absent)" : (s.degenerate ? "  (degenerate)" : ""));
        out += line;
    }
    std::snprintf(line, sizeof line, "%-20s %10.2f %10.2f %10.2f %8zu\n", "macro",
                  100.0 * report.macro_precision, 100.0 * report.macro_recall,
                  100.0 * report.macro_f1, report.total);
    out += line;
    std::snprintf(line, sizeof line, "%-20s %43.2f\n", "accuracy", 100.0 * report.accuracy);
    out += line;
    return out;
}

}  // namespace annotkit
