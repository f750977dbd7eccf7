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

#include "annotkit/simulation.hpp"

#include <algorithm>
#include <cstdio>

#include "annotkit/errors.hpp"
#include "annotkit/prompting.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

namespace {

std::string delimited(const TruthTable& truth, const std::string& label) {
    return truth.open_delimiter + label + truth.close_delimiter;
}

/// A class other than `label`, chosen by `draw`.
std::string wrong_label(const std::vector<std::string>& classes, const std::string& label,
                        std::uint64_t draw) {
    std::vector<std::string> others;
    for (const auto& c : classes) {
        if (c != label) {
            others.push_back(c);
        }
    }
    if (others.empty()) {
        return label;
    }
    return others[draw % others.size()];
}

std::uint64_t draw_for(std::uint64_t seed, std::uint64_t salt, const std::string& text) {
    return stable_hash64(text, seed ^ (salt * 0x9E3779B97F4A7C15ULL));
}

std::string class_in_quotes(const std::string& text, std::string_view marker) {
    auto pos = text.find(marker);
    if (pos == std::string::npos) {
        return "the label";
    }
    auto start = pos + marker.size();
    auto end = text.find_first_of("\"\n", start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

std::optional<std::string> TruthTable::record_text(const std::string& user_text) const {
    auto section = query_section(user_text);
    if (!section) {
        return std::nullopt;
    }
    if (label_by_text.count(*section)) {
        return section;
    }
    std::size_t pos = 0;
    while ((pos = section->find("\n\n", pos)) != std::string::npos) {
        auto prefix = section->substr(0, pos);
        if (label_by_text.count(prefix)) {
            return prefix;
        }
        pos += 2;
    }
    return std::nullopt;
}

std::optional<std::string> TruthTable::lookup(const std::string& user_text) const {
    auto text = record_text(user_text);
    if (!text) {
        return std::nullopt;
    }
    return label_by_text.at(*text);
}

TruthTable truth_from_gold(const Corpus& corpus) {
    TruthTable t;
    t.classes = corpus.schema().classes;
    t.open_delimiter = corpus.schema().open_delimiter;
    t.close_delimiter = corpus.schema().close_delimiter;
    for (const auto& r : corpus.records()) {
        if (r.gold_label) {
            t.label_by_text[r.text] = *r.gold_label;
        }
    }
    return t;
}

MockHandler simulated_annotator(std::shared_ptr<const TruthTable> truth, SimulatedAnnotatorSpec spec) {
    require(truth != nullptr, "simulated annotator needs a truth table");
    require(spec.accuracy >= 0.0 && spec.accuracy <= 1.0, "accuracy must lie in [0, 1]");
    return [truth, spec](const ChatRequest& request, std::uint64_t seed) -> std::optional<std::string> {
        if (classify_prompt(request.user_text) != PromptKind::classify) {
            return std::nullopt;
        }
        auto text = truth->record_text(request.user_text);
        if (!text) {
            return std::nullopt;
        }
        const auto gold = truth->label_by_text.find(*text);
        double p = spec.accuracy;
        if (spec.shot_bonus != 0.0) {
            auto answers = shot_answers(request.user_text);
            if (!answers.empty()) {
                auto same = std::count(answers.begin(), answers.end(), gold->second);
                p += spec.shot_bonus * static_cast<double>(same) / static_cast<double>(answers.size());
            }
            p = std::clamp(p, 0.0, 1.0);
        }
        SplitMix64 rng(draw_for(seed, spec.salt, *text));
        std::string label =
            rng.uniform() < p ? gold->second : wrong_label(truth->classes, gold->second, rng.next());
        if (request.user_text.find("step by step") != std::string::npos) {
            return "Step 1: read the text against the task description.\n"
                   "Step 2: compare it with the rules for each class.\n"
                   "The text fits the class " + label + " best.\n" + delimited(*truth, label);
        }
        return delimited(*truth, label);
    };
}

MockHandler simulated_judge(std::shared_ptr<const TruthTable> truth, double accuracy,
                            std::uint64_t salt) {
    require(truth != nullptr, "simulated judge needs a truth table");
    require(accuracy >= 0.0 && accuracy <= 1.0, "accuracy must lie in [0, 1]");
    return [truth, accuracy, salt](const ChatRequest& request,
                                   std::uint64_t seed) -> std::optional<std::string> {
        if (classify_prompt(request.user_text) != PromptKind::judge) {
            return std::nullopt;
        }
        auto text = truth->record_text(request.user_text);
        if (!text) {
            return std::nullopt;
        }
        auto gold = truth->lookup(request.user_text);
        SplitMix64 rng(draw_for(seed, salt, *text));
        std::string label = *gold;
        if (rng.uniform() >= accuracy) {
            label.clear();
            if (auto c = judge_candidates(request.user_text)) {
                LabelSchema schema{"judge", truth->classes, truth->open_delimiter, truth->close_delimiter};
                for (const auto* body : {&c->response_1, &c->response_2}) {
                    auto parsed = parse_label(*body, schema);
                    if (parsed.ok() && parsed.label != *gold) {
                        label = parsed.label;
                        break;
                    }
                }
            }
            if (label.empty()) {
                label = wrong_label(truth->classes, *gold, rng.next());
            }
        }
        return "Both responses were checked against the rules. Therefore, the correct answer is " +
               delimited(*truth, label) + ".";
    };
}

MockHandler scripted_rule_writer() {
    return [](const ChatRequest& request, std::uint64_t) -> std::optional<std::string> {
        switch (classify_prompt(request.user_text)) {
            case PromptKind::map: {
                auto label = class_in_quotes(request.user_text, "\nHuman label: ");
                return "The wording of this text signals \"" + label + "\".";
            }
            case PromptKind::reduce: {
                auto cls = class_in_quotes(request.user_text, "for the class \"");
                auto reasons = std::count(request.user_text.begin(), request.user_text.end(), '\n');
                return "Assign \"" + cls + "\" when the text uses wording typical of " + cls +
                       " (summarized from " + std::to_string(reasons) + " lines of rationale).";
            }
            default:
                return std::nullopt;
        }
    };
}

std::vector<TextRecord> synthetic_records(const SyntheticCorpusSpec& spec) {
    require(spec.classes.size() >= 2, "synthetic corpus needs at least two classes");
    require(spec.records >= spec.classes.size(), "too few records for the class count");
    constexpr std::size_t kVocab = 40;
    SplitMix64 rng(spec.seed);
    std::vector<TextRecord> out;
    for (std::size_t i = 0; i < spec.records; ++i) {
        // The first |classes| records cover every class once.
        std::size_t cls = i < spec.classes.size() ? i : rng.below(spec.classes.size());
        const auto& name = spec.classes[cls];
        std::string stem = casefold(name).substr(0, std::min<std::size_t>(4, name.size()));
        std::string text = "item " + std::to_string(i) + ":";
        for (std::size_t w = 0; w < spec.words_per_text; ++w) {
            if (rng.uniform() < spec.topical_share) {
                text += " " + stem + std::to_string(rng.below(kVocab));
            } else {
                text += " common" + std::to_string(rng.below(kVocab));
            }
        }
        TextRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "s%05zu", i);
        r.record_id = id;
        r.text = std::move(text);
        r.gold_label = name;
        out.push_back(std::move(r));
    }
    return out;
}

std::string synthetic_jsonl(const std::vector<TextRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json_line(r);
    }
    return out;
}

}  // namespace annotkit
