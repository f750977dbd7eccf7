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

#include "annotkit/config.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;

namespace {

[[noreturn]] void toml_error(std::size_t line, const std::string& msg) {
    fail(ErrorCode::ConfigError, "config line " + std::to_string(line) + ": " + msg);
}

class TomlLine {
public:
    TomlLine(std::string text, std::size_t line_no) : s_(std::move(text)), line_(line_no) {}

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) {
            ++pos_;
        }
    }
    bool at_end() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    void expect(char c) {
        if (peek() != c) {
            toml_error(line_, std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    std::vector<std::string> key() {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            std::string part;
            if (peek() == '"') {
                part = basic_string();
            } else {
                while (pos_ < s_.size() &&
                       (std::isalnum(static_cast<unsigned char>(s_[pos_])) != 0 || s_[pos_] == '_' ||
                        s_[pos_] == '-')) {
                    part += s_[pos_++];
                }
            }
            if (part.empty()) {
                toml_error(line_, "empty key");
            }
            parts.push_back(part);
            if (peek() != '.') {
                return parts;
            }
            ++pos_;
        }
    }

    json value() {
        char c = peek();
        if (c == '"') {
            return basic_string();
        }
        if (c == '\'') {
            ++pos_;
            auto end = s_.find('\'', pos_);
            if (end == std::string::npos) {
                toml_error(line_, "unterminated literal string");
            }
            std::string out = s_.substr(pos_, end - pos_);
            pos_ = end + 1;
            return out;
        }
        if (c == '[') {
            ++pos_;
            json arr = json::array();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            while (true) {
                arr.push_back(value());
                char d = peek();
                if (d == ',') {
                    ++pos_;
                    if (peek() == ']') {
                        ++pos_;
                        return arr;
                    }
                    continue;
                }
                expect(']');
                return arr;
            }
        }
        std::string word;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
               s_[pos_] != ' ' && s_[pos_] != '\t') {
            word += s_[pos_++];
        }
        if (word == "true") return true;
        if (word == "false") return false;
        std::string digits;
        for (char ch : word) {
            if (ch != '_') digits += ch;
        }
        try {
            std::size_t used = 0;
            if (digits.find_first_of(".eE") == std::string::npos &&
                digits.find("inf") == std::string::npos && digits.find("nan") == std::string::npos) {
                long long v = std::stoll(digits, &used);
                if (used == digits.size()) return v;
            } else {
                double v = std::stod(digits, &used);
                if (used == digits.size()) return v;
            }
        } catch (const std::exception&) {
        }
        toml_error(line_, "cannot parse value '" + word + "'");
    }

private:
    std::string basic_string() {
        expect('"');
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) {
                    break;
                }
                char e = s_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: toml_error(line_, std::string("unknown escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        if (pos_ >= s_.size()) {
            toml_error(line_, "unterminated string");
        }
        ++pos_;
        return out;
    }

    std::string s_;
    std::size_t pos_ = 0;
    std::size_t line_;
};

json* descend(json& root, const std::vector<std::string>& path, std::size_t line) {
    json* node = &root;
    for (const auto& p : path) {
        json& next = (*node)[p];
        if (next.is_null()) {
            next = json::object();
        }
        if (!next.is_object()) {
            toml_error(line, "'" + p + "' is not a table");
        }
        node = &next;
    }
    return node;
}

/// Reads typed keys out of one table and rejects anything unread.
class Table {
public:
    Table(json node, std::string name) : node_(std::move(node)), name_(std::move(name)) {}

    static Table section(const json& root, const std::string& name) {
        return Table(root.contains(name) ? root.at(name) : json::object(), name);
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) {
            return fallback;
        }
        try {
            return node_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(ErrorCode::ConfigError, "[" + name_ + "] " + key + " has the wrong type");
        }
    }

    std::string str(const std::string& key, std::string fallback = {}) {
        if (!has(key)) {
            return fallback;
        }
        if (!node_.at(key).is_string()) {
            fail(ErrorCode::ConfigError, "[" + name_ + "] " + key + " must be a string");
        }
        return node_.at(key).get<std::string>();
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        auto v = get<long long>(key, static_cast<long long>(fallback));
        if (v < 0) {
            fail(ErrorCode::ConfigError, "[" + name_ + "] " + key + " must be non-negative");
        }
        return static_cast<std::size_t>(v);
    }

    double real(const std::string& key, double fallback) {
        if (!has(key)) {
            return fallback;
        }
        const auto& v = node_.at(key);
        if (!v.is_number()) {
            fail(ErrorCode::ConfigError, "[" + name_ + "] " + key + " must be a number");
        }
        return v.get<double>();
    }

    void finish() const {
        for (const auto& [k, v] : node_.items()) {
            if (!seen_.count(k)) {
                fail(ErrorCode::ConfigError, "unknown key '" + k + "' in [" + name_ + "]");
            }
        }
    }

    const json& node() const { return node_; }

private:
    json node_;
    std::string name_;
    std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) {
        return {};
    }
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

/// `${NAME}` → NAME. Keys are only ever referenced by variable name.
std::string key_env_name(const std::string& section, const std::string& value) {
    if (value.size() > 3 && value.rfind("${", 0) == 0 && value.back() == '}') {
        return value.substr(2, value.size() - 3);
    }
    fail(ErrorCode::ConfigError, "[" + section +
                                     "] api_key must reference an environment variable as "
                                     "\"${NAME}\"; keys are never stored in config files");
}

ProviderSettings read_provider(const json& providers, const std::string& role,
                               const std::filesystem::path& base) {
    std::string section = "providers." + role;
    if (!providers.contains(role)) {
        fail(ErrorCode::ConfigError, "missing [" + section + "]");
    }
    Table t(providers.at(role), section);
    ProviderSettings s;
    auto& p = s.provider;
    p.provider_id = t.str("id", role);
    p.kind = t.str("kind", "mock");
    p.base_url = t.str("base_url");
    p.model_name = t.str("model", p.provider_id);
    p.api_key_env = t.str("api_key_env");
    if (t.has("api_key")) {
        p.api_key_env = key_env_name(section, t.str("api_key"));
    }
    p.max_in_flight = t.get<int>("max_in_flight", p.max_in_flight);
    p.max_retries = t.get<int>("max_retries", p.max_retries);
    p.timeout_s = t.real("timeout_s", p.timeout_s);
    p.temperature = t.real("temperature", p.temperature);
    if (t.has("seed")) {
        p.seed = t.get<long long>("seed", 0);
    }
    p.chat_path = t.str("chat_path", p.chat_path);
    p.embed_path = t.str("embed_path", p.embed_path);
    p.embedding_dimension = t.count("embedding_dimension", 0);
    if (t.has("simulate_accuracy")) {
        s.simulate_accuracy = t.real("simulate_accuracy", 0.0);
    }
    s.simulate_salt = t.count("simulate_salt", 1);
    s.shot_bonus = t.real("shot_bonus", 0.0);
    s.scripted_rules = t.get<bool>("scripted_rules", false);
    s.mock_rules = resolve(base, t.str("mock_rules"));
    t.finish();
    return s;
}

}  // namespace

json parse_toml(const std::string& text) {
    json root = json::object();
    json* table = &root;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        TomlLine line(raw, line_no);
        if (line.at_end()) {
            continue;
        }
        if (line.peek() == '[') {
            line.expect('[');
            auto path = line.key();
            line.expect(']');
            if (!line.at_end()) {
                toml_error(line_no, "trailing text after table header");
            }
            table = descend(root, path, line_no);
            continue;
        }
        auto key = line.key();
        line.expect('=');
        json value = line.value();
        if (!line.at_end()) {
            toml_error(line_no, "trailing text after value");
        }
        std::vector<std::string> parent(key.begin(), key.end() - 1);
        json* node = descend(*table, parent, line_no);
        if (node->contains(key.back())) {
            toml_error(line_no, "duplicate key '" + key.back() + "'");
        }
        (*node)[key.back()] = std::move(value);
    }
    return root;
}

void RunConfig::validate() const {
    try {
        schema.validate();
        require(!trim(task_description).empty(), "[task] description is required");
        require(!corpus_path.empty(), "[task] corpus is required");
        require(!run_dir.empty(), "[run] dir is required");
        for (const auto* s : {&annotator_a, &annotator_b, &judge, &embedder}) {
            s->provider.validate();
            if (s->simulate_accuracy) {
                require(*s->simulate_accuracy >= 0.0 && *s->simulate_accuracy <= 1.0,
                        "simulate_accuracy must lie in [0, 1]");
            }
        }
        require(annotator_a.provider.provider_id != annotator_b.provider.provider_id,
                "annotator_a and annotator_b must be different providers");
        require(reducer.target_dimension >= 2, "[reducer] target_dimension must be >= 2");
        require(reducer.method != ReducerMethod::external || !external_reduced.empty(),
                "[reducer] external method needs external_matrix");
        require(pool_size >= 1, "[pool] size must be >= 1");
        require(batch_size >= 1, "[run] batch_size must be >= 1");
        require(workers >= 1, "[run] workers must be >= 1");
        mmr.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) {
            throw;
        }
        fail(ErrorCode::ConfigError, e.message());
    }
}

AnnotationOptions RunConfig::annotation_options() const {
    AnnotationOptions o;
    o.mmr = mmr;
    o.batch_size = batch_size;
    o.workers = workers;
    return o;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::vector<std::string>& overrides) {
    json root = parse_toml(text);
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::ConfigError, "override '" + o + "' is not key=value");
        }
        TomlLine key_line(o.substr(0, eq), 0);
        auto path = key_line.key();
        json value = parse_toml("v = " + o.substr(eq + 1)).at("v");
        std::vector<std::string> parent(path.begin(), path.end() - 1);
        (*descend(root, parent, 0))[path.back()] = std::move(value);
    }
    RunConfig c;
    for (const auto& [k, v] : root.items()) {
        static const std::set<std::string> known = {"task", "run", "reducer", "pool", "retrieval",
                                                    "providers", "pricing", "server"};
        if (!known.count(k)) {
            fail(ErrorCode::ConfigError, "unknown table [" + k + "]");
        }
    }

    Table task = Table::section(root, "task");
    c.schema.task_name = task.str("name");
    c.schema.classes = task.get<std::vector<std::string>>("classes", {});
    c.schema.open_delimiter = task.str("open_delimiter", "<");
    c.schema.close_delimiter = task.str("close_delimiter", ">");
    c.task_description = task.str("description");
    c.corpus_path = resolve(base_dir, task.str("corpus"));
    task.finish();

    Table run = Table::section(root, "run");
    c.run_dir = resolve(base_dir, run.str("dir"));
    c.batch_size = run.count("batch_size", c.batch_size);
    c.workers = run.count("workers", c.workers);
    c.auto_label_from_gold = run.get<bool>("auto_label_from_gold", false);
    c.auto_approve_prompt = run.get<bool>("auto_approve_prompt", false);
    c.fixed_clock = run.str("fixed_clock");
    run.finish();

    Table reducer = Table::section(root, "reducer");
    std::string method = reducer.str("method", "pca");
    if (method == "pca") {
        c.reducer.method = ReducerMethod::pca;
    } else if (method == "external") {
        c.reducer.method = ReducerMethod::external;
    } else {
        fail(ErrorCode::ConfigError, "[reducer] method must be pca or external");
    }
    c.reducer.target_dimension = reducer.count("target_dimension", c.reducer.target_dimension);
    c.reducer.seed = reducer.count("seed", 0);
    c.external_reduced = resolve(base_dir, reducer.str("external_matrix"));
    reducer.finish();

    Table pool = Table::section(root, "pool");
    c.pool_size = pool.count("size", c.pool_size);
    c.pool_seed = pool.count("seed", 0);
    c.kmeans_max_iters = pool.count("max_iters", c.kmeans_max_iters);
    pool.finish();

    Table retrieval = Table::section(root, "retrieval");
    c.mmr.k = retrieval.count("k", c.mmr.k);
    c.mmr.lambda = retrieval.real("lambda", c.mmr.lambda);
    try {
        c.mmr.similarity = similarity_from_string(retrieval.str("similarity", "cosine"));
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, std::string("[retrieval] ") + e.message());
    }
    c.mmr.class_constrained = retrieval.get<bool>("class_constrained", false);
    std::string space = retrieval.str("space", "reduced");
    if (space != "reduced" && space != "raw") {
        fail(ErrorCode::ConfigError, "[retrieval] space must be reduced or raw");
    }
    c.retrieval_on_reduced = space == "reduced";
    retrieval.finish();

    json providers = root.contains("providers") ? root.at("providers") : json::object();
    for (const auto& [k, v] : providers.items()) {
        static const std::set<std::string> roles = {"annotator_a", "annotator_b", "judge", "embedder"};
        if (!roles.count(k)) {
            fail(ErrorCode::ConfigError, "unknown provider role [providers." + k + "]");
        }
    }
    c.annotator_a = read_provider(providers, "annotator_a", base_dir);
    c.annotator_b = read_provider(providers, "annotator_b", base_dir);
    c.judge = read_provider(providers, "judge", base_dir);
    c.embedder = read_provider(providers, "embedder", base_dir);

    Table pricing = Table::section(root, "pricing");
    c.price_sheet = resolve(base_dir, pricing.str("sheet"));
    pricing.finish();

    Table server = Table::section(root, "server");
    c.server.host = server.str("host", c.server.host);
    c.server.port = server.get<int>("port", c.server.port);
    c.server.token = server.str("token");
    server.finish();

    // The run directory and server settings do not change results.
    json hashed = root;
    if (hashed.contains("run")) {
        hashed["run"].erase("dir");
    }
    hashed.erase("server");
    c.config_hash = sha256_hex(hashed.dump());

    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.message());
    }
    auto base = std::filesystem::absolute(path).parent_path();
    return parse_config(text, base, overrides);
}

}  // namespace annotkit
