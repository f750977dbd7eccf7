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


#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "annotkit/errors.hpp"
#include "annotkit/llm_gateway.hpp"
#include "annotkit/text_util.hpp"
#include "support/test_support.hpp"

using namespace annotkit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an annotkit::Error");
    return ErrorCode::ConfigError;
}

ProviderConfig mock_config(const std::string& id = "mock-a") {
    ProviderConfig p;
    p.provider_id = id;
    p.model_name = "gpt-3.5-turbo";
    return p;
}

ProviderConfig live_config() {
    ProviderConfig p;
    p.provider_id = "live";
    p.kind = "openai";
    p.base_url = "https://llm.example/v1";
    p.model_name = "text-embedding-3-small";
    p.api_key_env = "ANNOTKIT_TEST_API_KEY";
    p.seed = 5;
    return p;
}

/// Replays canned responses and records each request.
class FakeTransport : public Transport {
public:
    std::vector<HttpResponse> replies;
    std::vector<std::string> urls;
    std::vector<HttpHeaders> headers;
    std::vector<std::string> bodies;

    HttpResponse post(const std::string& url, const HttpHeaders& h, const std::string& body, double) override {
        urls.push_back(url);
        headers.push_back(h);
        bodies.push_back(body);
        if (replies.empty()) return {500, "exhausted"};
        auto r = replies.front();
        replies.erase(replies.begin());
        return r;
    }
};

/// Fails with `code` for the first `failures` calls.
class FlakyBackend : public Backend {
public:
    FlakyBackend(int failures, ErrorCode code) : failures_(failures), code_(code) {}
    int calls = 0;

    ChatResponse chat(const ChatRequest&) override {
        if (calls++ < failures_) fail(code_, "injected");
        ChatResponse r;
        r.text = "<approve>";
        r.input_tokens = 10;
        r.output_tokens = 1;
        return r;
    }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        if (calls++ < failures_) fail(code_, "injected");
        return std::vector<std::vector<double>>(texts.size(), {1.0, 0.0});
    }

private:
    int failures_;
    ErrorCode code_;
};

}  // namespace

TEST_SUITE("llm_gateway") {

TEST_CASE("provider config validation") {
    CHECK_NOTHROW(mock_config().validate());
    auto p = live_config();
    CHECK_NOTHROW(p.validate());
    p.api_key_env.clear();
    CHECK(code_of([&] { p.validate(); }) == ErrorCode::PreconditionViolation);
    auto q = mock_config();
    q.temperature = 3.0;
    CHECK(code_of([&] { q.validate(); }) == ErrorCode::PreconditionViolation);
    q = mock_config();
    q.kind = "carrier-pigeon";
    CHECK(code_of([&] { q.validate(); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("mock backend is deterministic and honours rules before handlers") {
    auto cfg = mock_config();
    cfg.seed = 3;
    MockBackend a(cfg), b(cfg);
    ChatRequest req{"", "classify this", 16};
    CHECK(a.chat(req).text == b.chat(req).text);
    auto other = cfg;
    other.seed = 4;
    CHECK(MockBackend(other).chat(req).text != a.chat(req).text);

    a.add_handler([](const ChatRequest&, std::uint64_t) { return std::optional<std::string>("handled"); });
    CHECK(a.chat(req).text == "handled");
    a.add_rule("classify (\\w+)", "<$1>");
    CHECK(a.chat(req).text == "<this>");
    CHECK(code_of([&] { a.add_rule("(", "x"); }) == ErrorCode::ConfigError);

    auto e1 = a.embed({"alpha beta", "gamma"});
    auto e2 = b.embed({"alpha beta", "gamma"});
    CHECK(e1 == e2);
    double norm = 0;
    for (double x : e1[0]) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("mock rules load from a JSON file") {
    testing_support::TempDir dir;
    write_file_atomic(dir / "rules.json", R"j([{"pattern": "Text: (\\w+)", "response": "<$1>"}])j");
    MockBackend m(mock_config());
    m.load_rules(dir / "rules.json");
    CHECK(m.chat({"", "Text: oppose", 8}).text == "<oppose>");
    write_file_atomic(dir / "bad.json", "[{");
    CHECK(code_of([&] { m.load_rules(dir / "bad.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("transient failures retry with capped exponential backoff") {
    auto backend = std::make_shared<FlakyBackend>(3, ErrorCode::TransportError);
    auto cfg = mock_config();
    cfg.max_retries = 3;
    Gateway gw(cfg, backend);
    std::vector<long> delays;
    gw.set_sleeper([&](std::chrono::milliseconds d) { delays.push_back(d.count()); });
    auto r = gw.complete({"", "x", 8}, "coarse");
    CHECK(r.text == "<approve>");
    CHECK(r.provider_id == "mock-a");
    CHECK(delays == std::vector<long>{500, 1000, 2000});
    CHECK(gw.ledger()->totals() == UsageTotals{1, 10, 1});
    CHECK(gw.ledger()->totals_for_tag("coarse").calls == 1);
    CHECK(gw.backoff_delay(20).count() == 30000);
}

TEST_CASE("retries exhaust to RateLimitExhausted or Timeout; auth is not retried") {
    auto cfg = mock_config();
    cfg.max_retries = 2;
    {
        auto backend = std::make_shared<FlakyBackend>(100, ErrorCode::RateLimitExhausted);
        Gateway gw(cfg, backend);
        gw.set_sleeper([](std::chrono::milliseconds) {});
        CHECK(code_of([&] { gw.complete({"", "x", 8}); }) == ErrorCode::RateLimitExhausted);
        CHECK(backend->calls == 3);
        CHECK(gw.ledger()->totals().calls == 0);
    }
    {
        auto backend = std::make_shared<FlakyBackend>(100, ErrorCode::Timeout);
        Gateway gw(cfg, backend);
        gw.set_sleeper([](std::chrono::milliseconds) {});
        CHECK(code_of([&] { gw.embed({"a"}); }) == ErrorCode::Timeout);
    }
    {
        auto backend = std::make_shared<FlakyBackend>(1, ErrorCode::AuthError);
        Gateway gw(cfg, backend);
        gw.set_sleeper([](std::chrono::milliseconds) { FAIL("auth errors must not sleep"); });
        CHECK(code_of([&] { gw.complete({"", "x", 8}); }) == ErrorCode::AuthError);
        CHECK(backend->calls == 1);
    }
}

TEST_CASE("request preconditions") {
    Gateway gw(mock_config(), std::make_shared<MockBackend>(mock_config()));
    CHECK(code_of([&] { gw.complete({"", "", 8}); }) == ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { gw.complete({"", "x", 0}); }) == ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { gw.embed({}); }) == ErrorCode::PreconditionViolation);
    CHECK(code_of([&] { gw.embed({"a", ""}); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("in-flight calls never exceed max_in_flight") {
    struct SlowBackend : Backend {
        std::atomic<int> now{0}, peak{0};
        ChatResponse chat(const ChatRequest&) override {
            int v = ++now;
            int p = peak.load();
            while (v > p && !peak.compare_exchange_weak(p, v)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --now;
            return {"ok", 1, 1, "", {}};
        }
        std::vector<std::vector<double>> embed(const std::vector<std::string>&) override { return {}; }
    };
    auto backend = std::make_shared<SlowBackend>();
    auto cfg = mock_config();
    cfg.max_in_flight = 2;
    Gateway gw(cfg, backend);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 4; ++i) gw.complete({"", "x", 4});
        });
    }
    for (auto& t : threads) t.join();
    CHECK(backend->peak.load() <= 2);
    CHECK(backend->peak.load() >= 1);
    CHECK(gw.ledger()->totals().calls == 32);
}

TEST_CASE("http backend parses the OpenAI embedding fixture") {
    ::setenv("ANNOTKIT_TEST_API_KEY", "sk-test-123", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->replies.push_back({200, read_file(testing_support::fixture("embedding_response.json"))});
    auto cfg = live_config();
    cfg.embedding_dimension = 3;
    Gateway gw(cfg, make_backend(cfg, transport));
    auto m = gw.embed({"first text", "second"}, {"r1", "r2"});
    CHECK(m.record_ids == std::vector<std::string>{"r1", "r2"});
    CHECK(m.model_name == "text-embedding-3-small");
    CHECK(m.vectors(0, 0) == 1.0);
    CHECK(m.vectors(0, 2) == -0.75);
    CHECK(m.vectors(1, 1) == -0.5);
    REQUIRE(transport->urls.size() == 1);
    CHECK(transport->urls[0] == "https://llm.example/v1/embeddings");
    CHECK(transport->headers[0] == HttpHeaders{{"Authorization", "Bearer sk-test-123"}});
    auto body = json::parse(transport->bodies[0]);
    CHECK(body.at("model") == "text-embedding-3-small");
    CHECK(body.at("input") == json::array({"first text", "second"}));
    CHECK(body.at("dimensions") == 3);
    CHECK(gw.ledger()->totals_for_tag("embed").input_tokens == 3);
}

TEST_CASE("http backend chat request and usage") {
    ::setenv("ANNOTKIT_TEST_API_KEY", "sk-test-123", 1);
    auto transport = std::make_shared<FakeTransport>();
    transport->replies.push_back({200, read_file(testing_support::fixture("chat_response.json"))});
    auto cfg = live_config();
    cfg.model_name = "gpt-3.5-turbo";
    Gateway gw(cfg, make_backend(cfg, transport));
    auto r = gw.complete({"sys", "Text: hello", 64});
    CHECK(r.text == "<approve>");
    CHECK(r.input_tokens == 120);
    CHECK(r.output_tokens == 3);
    auto body = json::parse(transport->bodies[0]);
    CHECK(body.at("messages").size() == 2);
    CHECK(body.at("messages")[1].at("content") == "Text: hello");
    CHECK(body.at("max_tokens") == 64);
    CHECK(body.at("seed") == 5);
    CHECK(body.at("temperature") == 0.0);
    CHECK(transport->urls[0] == "https://llm.example/v1/chat/completions");
}

TEST_CASE("http status codes map to gateway errors") {
    ::setenv("ANNOTKIT_TEST_API_KEY", "sk-test-123", 1);
    auto cfg = live_config();
    cfg.max_retries = 0;
    auto status_code = [&](int status, const std::string& body) {
        auto transport = std::make_shared<FakeTransport>();
        transport->replies.push_back({status, body});
        Gateway gw(cfg, make_backend(cfg, transport));
        gw.set_sleeper([](std::chrono::milliseconds) {});
        return code_of([&] { gw.complete({"", "x", 8}); });
    };
    CHECK(status_code(401, "bad key") == ErrorCode::AuthError);
    CHECK(status_code(403, "") == ErrorCode::AuthError);
    CHECK(status_code(429, "") == ErrorCode::RateLimitExhausted);
    CHECK(status_code(408, "") == ErrorCode::Timeout);
    CHECK(status_code(503, "") == ErrorCode::RateLimitExhausted);
    CHECK(status_code(400, "") == ErrorCode::MalformedResponse);
    CHECK(status_code(200, "{not json") == ErrorCode::MalformedResponse);
    CHECK(status_code(200, R"({"choices": []})") == ErrorCode::MalformedResponse);
}

TEST_CASE("missing key environment variable is an auth error before any request") {
    ::unsetenv("ANNOTKIT_TEST_API_KEY");
    auto transport = std::make_shared<FakeTransport>();
    auto cfg = live_config();
    Gateway gw(cfg, make_backend(cfg, transport));
    CHECK(code_of([&] { gw.complete({"", "x", 8}); }) == ErrorCode::AuthError);
    CHECK(transport->urls.empty());
}

TEST_CASE("ledger drain returns only new entries") {
    UsageLedger ledger;
    ledger.record({"a", "m", "coarse", 1, 2});
    ledger.record({"b", "m", "consensus", 3, 4});
    CHECK(ledger.drain().size() == 2);
    CHECK(ledger.drain().empty());
    ledger.record({"a", "m", "coarse", 5, 6});
    auto fresh = ledger.drain();
    REQUIRE(fresh.size() == 1);
    CHECK(fresh[0].input_tokens == 5);
    CHECK(ledger.totals_for_provider("a") == UsageTotals{2, 6, 8});
    auto back = usage_entry_from_json(to_json(fresh[0]));
    CHECK(back.tag == "coarse");
    CHECK(back.model_name == "m");
}

TEST_CASE("price sheet and cost estimate") {
    auto sheet = PriceSheet::load(fs::path(ANNOTKIT_SOURCE_DIR) / "config" / "prices.json");
    CHECK(sheet.currency == "USD");
    CHECK(estimate_cost(sheet, 1'000'000, 1'000'000, "GPT-4-Turbo") == doctest::Approx(40.0));
    CHECK(estimate_cost(sheet, 2'000'000, 0, "gpt-3.5-turbo") == doctest::Approx(1.0));
    CHECK(estimate_cost(sheet, 0, 0, "gpt-3.5-turbo") == 0.0);
    CHECK(code_of([&] { estimate_cost(sheet, 1, 1, "unlisted-model"); }) == ErrorCode::UnknownModel);
    CHECK(code_of([] {
              PriceSheet::from_json(json::parse(R"({"models": {"m": {"input_per_million": -1, "output_per_million": 1}}})"));
          }) == ErrorCode::PreconditionViolation);
}

}
