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

#include <cmath>
#include <fstream>

#include "annotkit/errors.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;

namespace {

constexpr std::size_t kDefaultMockDimension = 64;

std::string hex64(std::uint64_t v) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace

std::vector<double> mock_embedding(std::string_view text, std::uint64_t seed, std::size_t dimension) {
    std::vector<double> v(dimension, 0.0);
    auto tokens = split_whitespace(casefold(text));
    if (tokens.empty()) {
        tokens.emplace_back(text);
    }
    for (const auto& token : tokens) {
        SplitMix64 rng(stable_hash64(token, seed));
        for (auto& x : v) {
            x += rng.gaussian();
        }
    }
    double norm = 0.0;
    for (double x : v) {
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (auto& x : v) {
            x /= norm;
        }
    }
    return v;
}

MockBackend::MockBackend(ProviderConfig config)
    : config_(std::move(config)),
      seed_(static_cast<std::uint64_t>(config_.seed.value_or(0))) {}

void MockBackend::add_rule(const std::string& pattern, std::string response) {
    try {
        rules_.push_back({std::regex(pattern, std::regex::ECMAScript), std::move(response)});
    } catch (const std::regex_error& e) {
        fail(ErrorCode::ConfigError, "bad mock rule pattern '" + pattern + "': " + e.what());
    }
}

void MockBackend::add_handler(MockHandler handler) {
    handlers_.push_back(std::move(handler));
}

void MockBackend::load_rules(const std::filesystem::path& path) {
    json rules;
    try {
        rules = json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    for (const auto& r : rules) {
        add_rule(r.at("pattern").get<std::string>(), r.at("response").get<std::string>());
    }
}

ChatResponse MockBackend::chat(const ChatRequest& request) {
    ChatResponse out;
    bool answered = false;
    for (const auto& rule : rules_) {
        std::smatch match;
        if (std::regex_search(request.user_text, match, rule.pattern)) {
            out.text = match.format(rule.response);
            answered = true;
            break;
        }
    }
    if (!answered) {
        for (const auto& handler : handlers_) {
            if (auto text = handler(request, seed_)) {
                out.text = std::move(*text);
                answered = true;
                break;
            }
        }
    }
    if (!answered) {
        out.text = "mock " + config_.provider_id + " " +
                   hex64(stable_hash64(request.system_text + '\x1f' + request.user_text, seed_));
    }
    out.input_tokens =
        whitespace_token_count(request.system_text) + whitespace_token_count(request.user_text);
    out.output_tokens = whitespace_token_count(out.text);
    out.provider_id = config_.provider_id;
    return out;
}

std::vector<std::vector<double>> MockBackend::embed(const std::vector<std::string>& texts) {
    std::size_t dim = config_.embedding_dimension > 0 ? config_.embedding_dimension
                                                      : kDefaultMockDimension;
    std::vector<std::vector<double>> rows;
    rows.reserve(texts.size());
    for (const auto& t : texts) {
        rows.push_back(mock_embedding(t, seed_, dim));
    }
    return rows;
}

}  // namespace annotkit
