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

#include "annotkit/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;

namespace {

constexpr std::string_view kTextMarker = "Text: ";
constexpr std::string_view kMapHeader = "Task description:\n";
constexpr std::string_view kMapLabelMarker = "\nHuman label: ";
constexpr std::string_view kReduceMarker = "\nSummarize the labeling rules for the class \"";
constexpr std::string_view kJudgeOpening = "You are given 2 responses (\"Response 1\" and \"Response 2\")";
constexpr std::string_view kResponse1 = "\n\nResponse 1:\n";
constexpr std::string_view kResponse2 = "\n\nResponse 2:\n";

std::string quoted_options(const std::vector<std::string>& classes) {
    std::string out;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (i > 0) {
            if (classes.size() == 2) {
                out += " and ";
            } else if (i + 1 == classes.size()) {
                out += ", or ";
            } else {
                out += ", ";
            }
        }
        out += "\"" + classes[i] + "\"";
    }
    return out;
}

/// Positions where `marker` starts a line.
std::vector<std::size_t> line_starts(const std::string& text, std::string_view marker,
                                     std::size_t limit = std::string::npos) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string::npos && pos < limit) {
        if (pos == 0 || text[pos - 1] == '\n') {
            out.push_back(pos);
        }
        pos += marker.size();
    }
    return out;
}

std::string rules_block(const EnhancedPrompt& prompt) {
    std::string out;
    for (const auto& cls : prompt.base.class_names) {
        auto it = prompt.per_class_rules.find(cls);
        if (it == prompt.per_class_rules.end() || trim(it->second).empty()) {
            continue;
        }
        out += "Rules for \"" + cls + "\":\n" + trim(it->second) + "\n\n";
    }
    if (!prompt.corrections.empty()) {
        out += "Corrections:\n";
        for (const auto& c : prompt.corrections) {
            out += "- " + trim(c) + "\n";
        }
        out += "\n";
    }
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool contains_word(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) {
        return false;
    }
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        bool left = pos == 0 || !is_word_char(haystack[pos - 1]);
        std::size_t end = pos + needle.size();
        bool right = end >= haystack.size() || !is_word_char(haystack[end]);
        if (left && right) {
            return true;
        }
        ++pos;
    }
    return false;
}

}  // namespace

std::string default_output_contract(const LabelSchema& schema) {
    return "Please choose your answer only from the " + std::to_string(schema.classes.size()) +
           " options -- " + quoted_options(schema.classes) +
           ". Complete the task very succinctly using only one word written between '" +
           schema.open_delimiter + "' and '" + schema.close_delimiter + "'.";
}

PromptTemplate PromptTemplate::from_schema(const LabelSchema& schema, std::string description) {
    schema.validate();
    PromptTemplate t;
    t.task_name = schema.task_name;
    t.initial_description = std::move(description);
    t.output_contract = default_output_contract(schema);
    t.class_names = schema.classes;
    t.open_delimiter = schema.open_delimiter;
    t.close_delimiter = schema.close_delimiter;
    t.validate();
    return t;
}

void PromptTemplate::validate() const {
    require(!trim(initial_description).empty(), "prompt template needs a task description");
    require(class_names.size() >= 2, "prompt template needs at least two classes");
    require(output_contract.find(open_delimiter) != std::string::npos &&
                output_contract.find(close_delimiter) != std::string::npos,
            "output contract must mention both delimiters");
}

std::vector<std::string> EnhancedPrompt::classes_missing_rules() const {
    std::vector<std::string> missing;
    for (const auto& cls : base.class_names) {
        auto it = per_class_rules.find(cls);
        if (it == per_class_rules.end() || trim(it->second).empty()) {
            missing.push_back(cls);
        }
    }
    return missing;
}

std::string EnhancedPrompt::content_hash() const {
    std::string canonical = base.initial_description + '\x1f' + base.output_contract + '\x1f';
    for (const auto& cls : base.class_names) {
        auto it = per_class_rules.find(cls);
        canonical += cls + '\x1e' + (it == per_class_rules.end() ? "" : it->second) + '\x1f';
    }
    for (const auto& c : corrections) {
        canonical += c + '\x1d';
    }
    return sha256_hex(canonical);
}

// --- map / reduce -----------------------------------------------------------

ChatRequest map_request(const PromptTemplate& base, const std::string& text, const std::string& label) {
    ChatRequest r;
    r.system_text = "You explain human annotation decisions so they can be turned into labeling rules.";
    r.user_text = std::string(kMapHeader) + trim(base.initial_description) + "\n\n" +
                  std::string(kTextMarker) + text + std::string(kMapLabelMarker) + label + "\n\n" +
                  "Explain why the human label fits this text under the task description. "
                  "Phrase the reason as a general rule that applies to similar texts.";
    r.max_output_tokens = 256;
    return r;
}

ChatRequest reduce_request(const PromptTemplate& base, const std::string& class_name,
                           const std::vector<std::string>& rationales) {
    ChatRequest r;
    r.system_text = "You summarize annotation rationales into labeling rules.";
    std::string body = std::string(kMapHeader) + trim(base.initial_description) + "\n\n" +
                       "Texts were labeled \"" + class_name + "\" for these reasons:\n";
    for (std::size_t i = 0; i < rationales.size(); ++i) {
        body += std::to_string(i + 1) + ". " + trim(rationales[i]) + "\n";
    }
    body += std::string(kReduceMarker).substr(1) + class_name +
            "\" as concise criteria. Reply with the rules only.";
    r.user_text = std::move(body);
    r.max_output_tokens = 512;
    return r;
}

std::vector<TraceEntry> map_rationales(const ExemplarPool& pool, const Corpus& corpus,
                                       const PromptTemplate& base, Gateway& gateway,
                                       std::vector<TraceEntry> resume,
                                       const std::function<void(const TraceEntry&)>& on_item) {
    require(!pool.pool_ids.empty(), "map_rationales needs a non-empty pool");
    require(pool.status == PoolStatus::labeled || pool.status == PoolStatus::verified,
            "map_rationales needs a fully labeled pool");
    require(resume.size() <= pool.pool_ids.size(), "resume state is longer than the pool");
    for (std::size_t i = 0; i < resume.size(); ++i) {
        require(resume[i].record_id == pool.pool_ids[i], "resume state does not follow pool order");
    }
    std::vector<TraceEntry> trace = std::move(resume);
    for (std::size_t i = trace.size(); i < pool.pool_ids.size(); ++i) {
        const auto& id = pool.pool_ids[i];
        const auto& label = pool.labeled.at(id);
        auto response = gateway.complete(map_request(base, corpus.record(id).text, label), "map");
        TraceEntry entry{id, label, response.text};
        if (on_item) {
            on_item(entry);
        }
        trace.push_back(std::move(entry));
    }
    return trace;
}

ReduceResult reduce_rules(const std::vector<TraceEntry>& rationales, const PromptTemplate& base,
                          Gateway& gateway) {
    require(!rationales.empty(), "reduce_rules needs at least one rationale");
    ReduceResult result;
    for (const auto& cls : base.class_names) {
        std::vector<std::string> texts;
        for (const auto& e : rationales) {
            if (e.label == cls) {
                texts.push_back(e.rationale);
            }
        }
        if (texts.empty()) {
            result.empty_rule_classes.push_back(cls);
            continue;
        }
        auto response = gateway.complete(reduce_request(base, cls, texts), "reduce");
        std::string rule = trim(response.text);
        if (rule.empty()) {
            result.empty_rule_classes.push_back(cls);
            continue;
        }
        result.rules[cls] = std::move(rule);
    }
    return result;
}

EnhancedPrompt make_enhanced_prompt(PromptTemplate base, std::vector<TraceEntry> trace,
                                    const ReduceResult& reduced) {
    base.validate();
    EnhancedPrompt p;
    p.base = std::move(base);
    p.generation_trace = std::move(trace);
    p.per_class_rules = reduced.rules;
    return p;
}

// --- human verification -------------------------------------------------------

std::string line_diff(const std::string& before, const std::string& after) {
    auto split = [](const std::string& s) {
        std::vector<std::string> lines;
        std::istringstream in(s);
        std::string line;
        while (std::getline(in, line)) {
            lines.push_back(line);
        }
        return lines;
    };
    auto a = split(before);
    auto b = split(after);
    // LCS table; rule blocks are short.
    std::vector<std::vector<std::size_t>> lcs(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = a.size(); i-- > 0;) {
        for (std::size_t j = b.size(); j-- > 0;) {
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
        }
    }
    std::string out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (i < a.size() && j < b.size() && a[i] == b[j]) {
            out += "  " + a[i] + "\n";
            ++i;
            ++j;
        } else if (j < b.size() && (i == a.size() || lcs[i][j + 1] >= lcs[i + 1][j])) {
            out += "+ " + b[j] + "\n";
            ++j;
        } else {
            out += "- " + a[i] + "\n";
            ++i;
        }
    }
    return out;
}

void edit_rule(EnhancedPrompt& prompt, const std::string& class_name, const std::string& text,
               const std::string& actor, std::string timestamp) {
    require(!actor.empty(), "prompt edits need an actor identity");
    auto it = std::find(prompt.base.class_names.begin(), prompt.base.class_names.end(), class_name);
    if (it == prompt.base.class_names.end()) {
        fail(ErrorCode::UnknownLabel, "no class '" + class_name + "' in prompt");
    }
    std::string before = prompt.per_class_rules[class_name];
    prompt.per_class_rules[class_name] = text;
    ++prompt.version;
    prompt.approved = false;
    prompt.approved_by.clear();
    prompt.human_edits.push_back({prompt.version, actor, "rule:" + class_name, line_diff(before, text),
                                  timestamp.empty() ? utc_timestamp() : std::move(timestamp)});
}

void add_correction(EnhancedPrompt& prompt, const std::string& text, const std::string& actor,
                    std::string timestamp) {
    require(!actor.empty(), "prompt edits need an actor identity");
    require(!trim(text).empty(), "correction text must be non-empty");
    prompt.corrections.push_back(text);
    ++prompt.version;
    prompt.approved = false;
    prompt.approved_by.clear();
    prompt.human_edits.push_back({prompt.version, actor, "correction", line_diff("", text),
                                  timestamp.empty() ? utc_timestamp() : std::move(timestamp)});
}

void approve(EnhancedPrompt& prompt, const std::string& actor, std::optional<int> expected_version) {
    require(!actor.empty(), "approval needs an actor identity");
    if (expected_version && *expected_version != prompt.version) {
        fail(ErrorCode::VersionConflict, "prompt is at version " + std::to_string(prompt.version) +
                                             ", approval was for version " +
                                             std::to_string(*expected_version));
    }
    auto missing = prompt.classes_missing_rules();
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) {
            names += (names.empty() ? "" : ", ") + m;
        }
        fail(ErrorCode::EmptyRule, "no rules for: " + names);
    }
    prompt.approved = true;
    prompt.approved_by = actor;
}

// --- assembly -----------------------------------------------------------------

ChatRequest assemble(const EnhancedPrompt& prompt, const std::vector<Shot>& shots,
                     const std::string& query_text, PromptMode mode,
                     const std::optional<JudgeCandidates>& candidates) {
    if (!prompt.approved) {
        fail(ErrorCode::NotApproved, "prompt version " + std::to_string(prompt.version) +
                                         " has not been approved");
    }
    require(!query_text.empty(), "query text must be non-empty");
    const auto& base = prompt.base;
    ChatRequest r;

    if (mode == PromptMode::judge) {
        if (!candidates) {
            fail(ErrorCode::MissingCandidates, "judge prompts need two candidate responses");
        }
        r.system_text = "You are an impartial judge of annotation responses.";
        r.user_text =
            std::string(kJudgeOpening) +
            " to the following task about the \"Text\", which can be correct or wrong.\n"
            "Please judge which response (or neither) to the following content is correct step by "
            "step and provide your reasoning succinctly (Do not exceed 100 words). Finally, based on "
            "the reasoning, choose the correct answer and repeat the response's (or your) choice "
            "once in '" + base.open_delimiter + "' and '" + base.close_delimiter + "'.\n\n"
            "Task:\n" + trim(base.initial_description) + "\n\n" + rules_block(prompt) +
            base.output_contract + "\n\n" + std::string(kTextMarker) + query_text +
            std::string(kResponse1) + trim(candidates->response_1) + std::string(kResponse2) +
            trim(candidates->response_2) + "\n";
        r.max_output_tokens = 300;
        return r;
    }

    r.system_text = "You are an expert annotator for the task \"" + base.task_name + "\".";
    std::string body = trim(base.initial_description) + "\n\n" + rules_block(prompt);
    for (std::size_t i = 0; i < shots.size(); ++i) {
        body += "Example " + std::to_string(i + 1) + ":\n" + std::string(kTextMarker) +
                shots[i].text + "\nAnswer: " + shots[i].label + "\n\n";
    }
    body += std::string(kTextMarker) + query_text + "\n\n";
    if (mode == PromptMode::cot) {
        body += "Analyze the text according to the task description step by step, giving your "
                "reasoning at each step before the final answer.\n";
    }
    body += base.output_contract;
    r.user_text = std::move(body);
    r.max_output_tokens = mode == PromptMode::cot ? 512 : 64;
    return r;
}

// --- parsing ------------------------------------------------------------------

std::string to_string(ParsePath path) {
    switch (path) {
        case ParsePath::delimited: return "delimited";
        case ParsePath::fallback_scan: return "fallback_scan";
        case ParsePath::failed: return "failed";
    }
    return "failed";
}

ParsePath parse_path_from_string(const std::string& text) {
    if (text == "delimited") return ParsePath::delimited;
    if (text == "fallback_scan") return ParsePath::fallback_scan;
    if (text == "failed") return ParsePath::failed;
    fail(ErrorCode::ParseError, "unknown parse path '" + text + "'");
}

ParsedLabel parse_label(const std::string& text, const LabelSchema& schema) {
    ParsedLabel out;
    out.raw = text;
    const auto& open = schema.open_delimiter;
    const auto& close = schema.close_delimiter;

    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while ((pos = text.find(open, pos)) != std::string::npos) {
        std::size_t start = pos + open.size();
        std::size_t end = text.find(close, start);
        if (end == std::string::npos) {
            break;
        }
        std::string inner = text.substr(start, end - start);
        // An inner open delimiter means this one was a stray '<'.
        std::size_t nested = inner.rfind(open);
        if (nested != std::string::npos) {
            inner = inner.substr(nested + open.size());
        }
        tokens.push_back(inner);
        pos = end + close.size();
    }
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        if (auto cls = schema.match(*it)) {
            out.label = *cls;
            out.parse_path = ParsePath::delimited;
            return out;
        }
    }

    std::string last_line;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!trim(line).empty()) {
            last_line = line;
        }
    }
    std::string folded = casefold(last_line);
    std::vector<std::string> hits;
    for (const auto& cls : schema.classes) {
        if (contains_word(folded, normalize_label(cls))) {
            hits.push_back(cls);
        }
    }
    if (hits.size() == 1) {
        out.label = hits.front();
        out.parse_path = ParsePath::fallback_scan;
    }
    return out;
}

PromptKind classify_prompt(const std::string& user_text) {
    if (user_text.starts_with(kJudgeOpening)) {
        return PromptKind::judge;
    }
    if (user_text.starts_with(kMapHeader)) {
        if (user_text.find(kReduceMarker) != std::string::npos) {
            return PromptKind::reduce;
        }
        if (user_text.find(kMapLabelMarker) != std::string::npos) {
            return PromptKind::map;
        }
    }
    if (!line_starts(user_text, kTextMarker).empty()) {
        return PromptKind::classify;
    }
    return PromptKind::unknown;
}

std::optional<std::string> query_section(const std::string& user_text) {
    std::size_t limit = std::string::npos;
    if (classify_prompt(user_text) == PromptKind::judge) {
        limit = user_text.find(kResponse1);
    }
    auto starts = line_starts(user_text, kTextMarker, limit);
    if (starts.empty()) {
        return std::nullopt;
    }
    std::size_t begin = starts.back() + kTextMarker.size();
    std::size_t end = limit == std::string::npos ? user_text.size() : limit;
    return user_text.substr(begin, end - begin);
}

std::vector<std::string> shot_answers(const std::string& user_text) {
    std::vector<std::string> out;
    auto queries = line_starts(user_text, kTextMarker);
    std::size_t limit = queries.empty() ? user_text.size() : queries.back();
    for (auto pos : line_starts(user_text, "Answer: ", limit)) {
        std::size_t start = pos + 8;
        std::size_t end = user_text.find('\n', start);
        out.push_back(user_text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    }
    return out;
}

std::optional<JudgeCandidates> judge_candidates(const std::string& user_text) {
    std::size_t r1 = user_text.find(kResponse1);
    if (r1 == std::string::npos) {
        return std::nullopt;
    }
    std::size_t r2 = user_text.find(kResponse2, r1 + kResponse1.size());
    if (r2 == std::string::npos) {
        return std::nullopt;
    }
    JudgeCandidates c;
    std::size_t b1 = r1 + kResponse1.size();
    c.response_1 = user_text.substr(b1, r2 - b1);
    c.response_2 = trim(user_text.substr(r2 + kResponse2.size()));
    return c;
}

// --- persistence --------------------------------------------------------------

namespace {

struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> fields;
    std::string body;
};

std::string escape_body(const std::string& body) {
    std::string out;
    std::istringstream in(body);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && (line[0] == '[' || line[0] == '\\')) {
            out += "\\";
        }
        out += line + "\n";
    }
    if (!body.empty() && body.back() == '\n') {
        out += "\n";
    }
    return out;
}

std::string render(const Section& s) {
    std::string out = "[" + s.name + "]\n";
    for (const auto& [k, v] : s.fields) {
        require(v.find('\n') == std::string::npos, "field '" + k + "' must be single-line");
        out += k + ": " + v + "\n";
    }
    out += "---\n" + escape_body(s.body) + "\n";
    return out;
}

std::vector<Section> parse_sections(const std::string& text) {
    std::vector<Section> sections;
    std::istringstream in(text);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    std::size_t i = 0;
    while (i < lines.size()) {
        const auto& line = lines[i];
        if (line.empty() || line[0] == '#') {
            ++i;
            continue;
        }
        if (line.front() != '[' || line.back() != ']') {
            fail(ErrorCode::ParseError, "prompt file line " + std::to_string(i + 1) + ": expected [section]");
        }
        Section s;
        s.name = line.substr(1, line.size() - 2);
        ++i;
        for (; i < lines.size() && lines[i] != "---"; ++i) {
            auto colon = lines[i].find(": ");
            if (colon == std::string::npos) {
                fail(ErrorCode::ParseError, "prompt file line " + std::to_string(i + 1) + ": expected 'key: value'");
            }
            s.fields.emplace_back(lines[i].substr(0, colon), lines[i].substr(colon + 2));
        }
        ++i;
        std::vector<std::string> body;
        for (; i < lines.size(); ++i) {
            const auto& l = lines[i];
            if (!l.empty() && l.front() == '[') {
                break;
            }
            body.push_back(!l.empty() && l.front() == '\\' ? l.substr(1) : l);
        }
        // render() adds one blank separator line after the body.
        if (!body.empty() && body.back().empty()) {
            body.pop_back();
        }
        for (std::size_t b = 0; b < body.size(); ++b) {
            s.body += (b ? "\n" : "") + body[b];
        }
        sections.push_back(std::move(s));
    }
    return sections;
}

std::string field(const Section& s, const std::string& key) {
    for (const auto& [k, v] : s.fields) {
        if (k == key) {
            return v;
        }
    }
    fail(ErrorCode::ParseError, "section [" + s.name + "] lacks field '" + key + "'");
}

}  // namespace

std::string serialize_prompt(const EnhancedPrompt& p) {
    std::string out = "# annotkit enhanced prompt\n\n";
    out += render({"prompt",
                   {{"task", p.base.task_name},
                    {"version", std::to_string(p.version)},
                    {"approved", p.approved ? "true" : "false"},
                    {"approved_by", p.approved_by},
                    {"open_delimiter", p.base.open_delimiter},
                    {"close_delimiter", p.base.close_delimiter}},
                   ""});
    for (const auto& cls : p.base.class_names) {
        out += render({"class", {{"name", cls}}, ""});
    }
    out += render({"description", {}, p.base.initial_description});
    out += render({"contract", {}, p.base.output_contract});
    for (const auto& cls : p.base.class_names) {
        auto it = p.per_class_rules.find(cls);
        if (it != p.per_class_rules.end()) {
            out += render({"rule", {{"class", cls}}, it->second});
        }
    }
    for (const auto& c : p.corrections) {
        out += render({"correction", {}, c});
    }
    for (const auto& t : p.generation_trace) {
        out += render({"trace", {{"record_id", t.record_id}, {"label", t.label}}, t.rationale});
    }
    for (const auto& e : p.human_edits) {
        out += render({"edit",
                       {{"version", std::to_string(e.version)},
                        {"actor", e.actor},
                        {"target", e.target},
                        {"timestamp", e.timestamp}},
                       e.diff});
    }
    return out;
}

EnhancedPrompt parse_prompt(const std::string& text) {
    EnhancedPrompt p;
    for (const auto& s : parse_sections(text)) {
        if (s.name == "prompt") {
            p.base.task_name = field(s, "task");
            p.version = std::stoi(field(s, "version"));
            p.approved = field(s, "approved") == "true";
            p.approved_by = field(s, "approved_by");
            p.base.open_delimiter = field(s, "open_delimiter");
            p.base.close_delimiter = field(s, "close_delimiter");
        } else if (s.name == "class") {
            p.base.class_names.push_back(field(s, "name"));
        } else if (s.name == "description") {
            p.base.initial_description = s.body;
        } else if (s.name == "contract") {
            p.base.output_contract = s.body;
        } else if (s.name == "rule") {
            p.per_class_rules[field(s, "class")] = s.body;
        } else if (s.name == "correction") {
            p.corrections.push_back(s.body);
        } else if (s.name == "trace") {
            p.generation_trace.push_back({field(s, "record_id"), field(s, "label"), s.body});
        } else if (s.name == "edit") {
            p.human_edits.push_back({std::stoi(field(s, "version")), field(s, "actor"),
                                     field(s, "target"), s.body, field(s, "timestamp")});
        } else {
            fail(ErrorCode::ParseError, "unknown prompt section [" + s.name + "]");
        }
    }
    p.base.validate();
    return p;
}

json to_json(const EnhancedPrompt& p) {
    json j;
    j["task"] = p.base.task_name;
    j["version"] = p.version;
    j["approved"] = p.approved;
    j["approved_by"] = p.approved_by;
    j["classes"] = p.base.class_names;
    j["description"] = p.base.initial_description;
    j["output_contract"] = p.base.output_contract;
    j["rules"] = p.per_class_rules;
    j["corrections"] = p.corrections;
    j["missing_rules"] = p.classes_missing_rules();
    json trace = json::array();
    for (const auto& t : p.generation_trace) {
        trace.push_back({{"record_id", t.record_id}, {"label", t.label}, {"rationale", t.rationale}});
    }
    j["generation_trace"] = trace;
    json edits = json::array();
    for (const auto& e : p.human_edits) {
        edits.push_back({{"version", e.version},
                         {"actor", e.actor},
                         {"target", e.target},
                         {"diff", e.diff},
                         {"timestamp", e.timestamp}});
    }
    j["human_edits"] = edits;
    return j;
}

}  // namespace annotkit
