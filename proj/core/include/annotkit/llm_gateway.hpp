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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "annotkit/corpus_store.hpp"

namespace annotkit {

struct ProviderConfig {
    std::string provider_id;
    /// "mock" or "openai" (any OpenAI-compatible chat/embedding endpoint).
    std::string kind = "mock";
    std::string base_url;
    std::string model_name;
    /// Name of the environment variable holding the key, never the key.
    std::string api_key_env;
    int max_in_flight = 4;
    int max_retries = 3;
    double timeout_s = 60.0;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    std::string chat_path = "/chat/completions";
    std::string embed_path = "/embeddings";
    /// Mock vector width; for live providers, requested "dimensions" when > 0.
    std::size_t embedding_dimension = 0;

    void validate() const;
    bool is_mock() const { return kind == "mock"; }
};

struct ChatRequest {
    std::string system_text;
    std::string user_text;
    int max_output_tokens = 512;
};

struct ChatResponse {
    std::string text;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    std::string provider_id;
    std::chrono::duration<double> latency{0};
};

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// One HTTP POST. Implementations throw Error(TransportError) on connection
/// failure and Error(Timeout) when the deadline passes.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers,
                              const std::string& body, double timeout_s) = 0;
};

std::shared_ptr<Transport> make_http_transport();

// ---------------------------------------------------------------------------
// Backends: a single attempt against one provider. Retries and throttling
// live in Gateway.
// ---------------------------------------------------------------------------

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse chat(const ChatRequest& request) = 0;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// OpenAI-compatible JSON over a Transport.
class HttpBackend final : public Backend {
public:
    HttpBackend(ProviderConfig config, std::shared_ptr<Transport> transport);

    ChatResponse chat(const ChatRequest& request) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

private:
    HttpHeaders headers() const;
    HttpResponse checked_post(const std::string& path, const std::string& body);

    ProviderConfig config_;
    std::shared_ptr<Transport> transport_;
};

/// Scripted response: returns text for a request, or nullopt to fall through.
using MockHandler = std::function<std::optional<std::string>(const ChatRequest&, std::uint64_t seed)>;

/// Deterministic offline provider. Responses are a pure function of
/// (seed, request text): rules are tried in order, then handlers, then a
/// hash-derived default. Token counts are whitespace approximations.
class MockBackend final : public Backend {
public:
    explicit MockBackend(ProviderConfig config);

    /// `pattern` is an ECMAScript regex searched in user_text; `response` may
    /// use $1..$9 for capture groups.
    void add_rule(const std::string& pattern, std::string response);
    void add_handler(MockHandler handler);
    /// JSON array of {"pattern": str, "response": str}.
    void load_rules(const std::filesystem::path& path);

    ChatResponse chat(const ChatRequest& request) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

    std::uint64_t seed() const { return seed_; }

private:
    struct Rule {
        std::regex pattern;
        std::string response;
    };

    ProviderConfig config_;
    std::uint64_t seed_;
    std::vector<Rule> rules_;
    std::vector<MockHandler> handlers_;
};

/// Token-hashing embedding: each whitespace token maps to a seeded
/// pseudo-random direction; a text embeds as the normalized sum. Shared
/// vocabulary therefore yields cosine similarity.
std::vector<double> mock_embedding(std::string_view text, std::uint64_t seed, std::size_t dimension);

std::shared_ptr<Backend> make_backend(const ProviderConfig& config,
                                      std::shared_ptr<Transport> transport = nullptr);

// ---------------------------------------------------------------------------
// Accounting
// ---------------------------------------------------------------------------

struct UsageEntry {
    std::string provider_id;
    std::string model_name;
    std::string tag;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
};

struct UsageTotals {
    std::size_t calls = 0;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;

    bool operator==(const UsageTotals&) const = default;
};

/// Thread-safe run ledger. Entries accumulate as pending until drain(), which
/// the orchestrator calls when it commits a checkpoint.
class UsageLedger {
public:
    void record(UsageEntry entry);

    UsageTotals totals() const;
    UsageTotals totals_for_tag(const std::string& tag) const;
    UsageTotals totals_for_provider(const std::string& provider_id) const;
    std::vector<UsageEntry> entries() const;
    std::vector<UsageEntry> drain();

private:
    mutable std::mutex mu_;
    std::vector<UsageEntry> entries_;
    std::size_t drained_ = 0;
};

nlohmann::json to_json(const UsageEntry& entry);
UsageEntry usage_entry_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

/// Uniform entry point for chat and embedding calls against one provider:
/// validates requests, bounds in-flight calls, retries transient failures
/// (transport, 429, 5xx, timeouts) with exponential backoff, and records
/// usage. Safe to share across threads.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway(ProviderConfig config, std::shared_ptr<Backend> backend,
            std::shared_ptr<UsageLedger> ledger = nullptr);

    ChatResponse complete(const ChatRequest& request, const std::string& tag = "chat");

    /// One row per text. `record_ids` defaults to positional indices.
    EmbeddingMatrix embed(const std::vector<std::string>& texts,
                          std::vector<std::string> record_ids = {});

    const ProviderConfig& config() const { return config_; }
    const std::shared_ptr<UsageLedger>& ledger() const { return ledger_; }
    Backend& backend() { return *backend_; }

    void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
    std::chrono::milliseconds backoff_delay(int retry) const;

private:
    template <typename Fn>
    auto with_retries(Fn&& attempt) -> decltype(attempt());

    class Slot;

    ProviderConfig config_;
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<UsageLedger> ledger_;
    Sleeper sleeper_;

    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Pricing
// ---------------------------------------------------------------------------

struct ModelPrice {
    /// Currency per 1M tokens.
    double input_price = 0.0;
    double output_price = 0.0;
};

struct PriceSheet {
    std::string version;
    std::string currency = "USD";
    std::map<std::string, ModelPrice> models;

    static PriceSheet from_json(const nlohmann::json& j);
    static PriceSheet load(const std::filesystem::path& path);
};

/// input_tokens/1e6 * input_price + output_tokens/1e6 * output_price.
/// Model names match case-insensitively. Throws UnknownModel.
double estimate_cost(const PriceSheet& sheet, std::size_t input_tokens, std::size_t output_tokens,
                     std::string_view model);

}  // namespace annotkit
