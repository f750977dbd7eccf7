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

#include "annotkit/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;

void ProviderConfig::validate() const {
    require(!provider_id.empty(), "provider_id must be set");
    require(kind == "mock" || kind == "openai", "unknown provider kind '" + kind + "'");
    require(max_in_flight >= 1, "max_in_flight must be >= 1 for " + provider_id);
    require(max_retries >= 0, "max_retries must be >= 0 for " + provider_id);
    require(std::isfinite(temperature) && temperature >= 0.0 && temperature <= 2.0,
            "temperature must be finite and in [0, 2] for " + provider_id);
    require(timeout_s > 0.0, "timeout must be positive for " + provider_id);
    if (!is_mock()) {
        require(!base_url.empty(), "base_url required for " + provider_id);
        require(!api_key_env.empty(), "api_key_env required for " + provider_id);
    }
}

std::shared_ptr<Backend> make_backend(const ProviderConfig& config,
                                      std::shared_ptr<Transport> transport) {
    config.validate();
    if (config.is_mock()) {
        return std::make_shared<MockBackend>(config);
    }
    if (!transport) {
        transport = make_http_transport();
    }
    return std::make_shared<HttpBackend>(config, std::move(transport));
}

// --- ledger ----------------------------------------------------------------

void UsageLedger::record(UsageEntry entry) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(entry));
}

namespace {

template <typename Pred>
UsageTotals sum_if(const std::vector<UsageEntry>& entries, Pred pred) {
    UsageTotals t;
    for (const auto& e : entries) {
        if (pred(e)) {
            ++t.calls;
            t.input_tokens += e.input_tokens;
            t.output_tokens += e.output_tokens;
        }
    }
    return t;
}

}  // namespace

UsageTotals UsageLedger::totals() const {
    std::lock_guard lock(mu_);
    return sum_if(entries_, [](const UsageEntry&) { return true; });
}

UsageTotals UsageLedger::totals_for_tag(const std::string& tag) const {
    std::lock_guard lock(mu_);
    return sum_if(entries_, [&](const UsageEntry& e) { return e.tag == tag; });
}

UsageTotals UsageLedger::totals_for_provider(const std::string& provider_id) const {
    std::lock_guard lock(mu_);
    return sum_if(entries_, [&](const UsageEntry& e) { return e.provider_id == provider_id; });
}

std::vector<UsageEntry> UsageLedger::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::vector<UsageEntry> UsageLedger::drain() {
    std::lock_guard lock(mu_);
    std::vector<UsageEntry> out(entries_.begin() + static_cast<std::ptrdiff_t>(drained_),
                                entries_.end());
    drained_ = entries_.size();
    return out;
}

json to_json(const UsageEntry& e) {
    return json{{"provider_id", e.provider_id},
                {"model", e.model_name},
                {"tag", e.tag},
                {"input_tokens", e.input_tokens},
                {"output_tokens", e.output_tokens}};
}

UsageEntry usage_entry_from_json(const json& j) {
    UsageEntry e;
    e.provider_id = j.at("provider_id").get<std::string>();
    e.model_name = j.value("model", "");
    e.tag = j.value("tag", "");
    e.input_tokens = j.at("input_tokens").get<std::size_t>();
    e.output_tokens = j.at("output_tokens").get<std::size_t>();
    return e;
}

// --- gateway ---------------------------------------------------------------

class Gateway::Slot {
public:
    explicit Slot(Gateway& g) : g_(g) {
        std::unique_lock lock(g_.mu_);
        g_.cv_.wait(lock, [&] { return g_.in_flight_ < g_.config_.max_in_flight; });
        ++g_.in_flight_;
    }
    ~Slot() {
        {
            std::lock_guard lock(g_.mu_);
            --g_.in_flight_;
        }
        g_.cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

private:
    Gateway& g_;
};

Gateway::Gateway(ProviderConfig config, std::shared_ptr<Backend> backend,
                 std::shared_ptr<UsageLedger> ledger)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      ledger_(ledger ? std::move(ledger) : std::make_shared<UsageLedger>()),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    config_.validate();
    require(backend_ != nullptr, "gateway needs a backend");
}

std::chrono::milliseconds Gateway::backoff_delay(int retry) const {
    constexpr long kBaseMs = 500;
    constexpr long kCapMs = 30000;
    long delay = kBaseMs << std::min(retry, 16);
    return std::chrono::milliseconds(std::min(delay, kCapMs));
}

namespace {

bool is_transient(ErrorCode code) {
    return code == ErrorCode::TransportError || code == ErrorCode::RateLimitExhausted ||
           code == ErrorCode::Timeout;
}

}  // namespace

template <typename Fn>
auto Gateway::with_retries(Fn&& attempt) -> decltype(attempt()) {
    for (int retry = 0;; ++retry) {
        try {
            Slot slot(*this);
            return attempt();
        } catch (const Error& e) {
            if (!is_transient(e.code())) {
                throw;
            }
            if (retry >= config_.max_retries) {
                ErrorCode code = e.code() == ErrorCode::Timeout ? ErrorCode::Timeout
                                                                 : ErrorCode::RateLimitExhausted;
                fail(code, config_.provider_id + ": gave up after " + std::to_string(retry + 1) +
                               " attempts; last failure: " + e.what());
            }
        }
        sleeper_(backoff_delay(retry));
    }
}

ChatResponse Gateway::complete(const ChatRequest& request, const std::string& tag) {
    require(!request.user_text.empty(), "chat request user_text must be non-empty");
    require(request.max_output_tokens > 0, "max_output_tokens must be positive");
    auto start = std::chrono::steady_clock::now();
    ChatResponse response = with_retries([&] { return backend_->chat(request); });
    response.provider_id = config_.provider_id;
    response.latency = std::chrono::steady_clock::now() - start;
    ledger_->record({config_.provider_id, config_.model_name, tag, response.input_tokens,
                     response.output_tokens});
    return response;
}

EmbeddingMatrix Gateway::embed(const std::vector<std::string>& texts,
                               std::vector<std::string> record_ids) {
    require(!texts.empty(), "embed needs at least one text");
    for (const auto& t : texts) {
        require(!t.empty(), "embed texts must be non-empty");
    }
    if (record_ids.empty()) {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            record_ids.push_back(std::to_string(i));
        }
    }
    require(record_ids.size() == texts.size(), "record_ids must align with texts");
    auto rows = with_retries([&] { return backend_->embed(texts); });
    if (rows.size() != texts.size()) {
        fail(ErrorCode::MalformedResponse, config_.provider_id + ": expected " +
                                               std::to_string(texts.size()) + " embeddings, got " +
                                               std::to_string(rows.size()));
    }
    std::size_t dim = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != dim || dim == 0) {
            fail(ErrorCode::DimensionMismatch, config_.provider_id + ": ragged embedding rows");
        }
    }
    EmbeddingMatrix m;
    m.record_ids = std::move(record_ids);
    m.model_name = config_.model_name.empty() ? config_.provider_id : config_.model_name;
    m.reduced = false;
    m.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            m.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    m.validate();
    std::size_t tokens = 0;
    for (const auto& t : texts) {
        tokens += whitespace_token_count(t);
    }
    ledger_->record({config_.provider_id, m.model_name, "embed", tokens, 0});
    return m;
}

// --- pricing ---------------------------------------------------------------

PriceSheet PriceSheet::from_json(const json& j) {
    PriceSheet sheet;
    sheet.version = j.value("version", "");
    sheet.currency = j.value("currency", "USD");
    for (const auto& [name, entry] : j.at("models").items()) {
        ModelPrice p;
        p.input_price = entry.at("input_per_million").get<double>();
        p.output_price = entry.at("output_per_million").get<double>();
        require(p.input_price >= 0.0 && p.output_price >= 0.0,
                "negative price for model '" + name + "'");
        sheet.models[casefold(name)] = p;
    }
    return sheet;
}

PriceSheet PriceSheet::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

double estimate_cost(const PriceSheet& sheet, std::size_t input_tokens, std::size_t output_tokens,
                     std::string_view model) {
    auto it = sheet.models.find(casefold(model));
    if (it == sheet.models.end()) {
        fail(ErrorCode::UnknownModel, "no price entry for model '" + std::string(model) + "'");
    }
    return static_cast<double>(input_tokens) / 1e6 * it->second.input_price +
           static_cast<double>(output_tokens) / 1e6 * it->second.output_price;
}

}  // namespace annotkit
