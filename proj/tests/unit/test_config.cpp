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

#include "annotkit/config.hpp"
#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"
#include "support/test_support.hpp"

using namespace annotkit;
namespace fs = std::filesystem;
using testing_support::TempDir;

namespace {

std::string error_of(const std::function<void()>& fn, ErrorCode expected = ErrorCode::ConfigError) {
    try {
        fn();
    } catch (const Error& e) {
        CHECK(e.code() == expected);
        return e.message();
    }
    FAIL("expected an annotkit::Error");
    return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("TOML subset") {
    auto j = parse_toml(
        "# comment\n"
        "top = 1\n"
        "[a.b]\n"
        "s = \"x \\\"q\\\" \\n y\"  # trailing\n"
        "f = -2.5\n"
        "t = true\n"
        "list = [\"p\", \"q\"]\n"
        "nums = [1, 2, 3]\n");
    CHECK(j.at("top") == 1);
    CHECK(j.at("a").at("b").at("s") == "x \"q\" \n y");
    CHECK(j.at("a").at("b").at("f") == -2.5);
    CHECK(j.at("a").at("b").at("t") == true);
    CHECK(j.at("a").at("b").at("list") == nlohmann::json::array({"p", "q"}));
    CHECK(j.at("a").at("b").at("nums").size() == 3);
    error_of([] { parse_toml("x = \n"); });
    error_of([] { parse_toml("x = \"open\n"); });
    error_of([] { parse_toml("[broken\n"); });
    error_of([] { parse_toml("x = 1\nx = 2\n"); });
}

TEST_CASE("shipped example configs parse") {
    fs::path dir = fs::path(ANNOTKIT_SOURCE_DIR) / "config";
    auto example = load_config(dir / "example.toml");
    CHECK(example.schema.classes == std::vector<std::string>{"approve", "oppose"});
    CHECK(example.pool_size == 40);
    CHECK(example.annotator_a.scripted_rules);
    CHECK(example.judge.simulate_accuracy == 0.9);
    CHECK(example.price_sheet == dir / "prices.json");
    auto live = load_config(dir / "openai.toml");
    CHECK(live.annotator_a.provider.kind == "openai");
    CHECK(live.annotator_a.provider.api_key_env == "OPENAI_API_KEY");
    CHECK(live.judge.provider.api_key_env == "OPENAI_API_KEY");
    CHECK(live.annotator_b.provider.seed == 2);
}

TEST_CASE("api keys are only ever environment variable references") {
    TempDir dir;
    testing_support::SyntheticRun s;
    auto text = testing_support::write_synthetic_run(dir.path(), s);
    auto with_key = [&](const std::string& line) {
        auto t = text;
        auto at = t.find("[providers.judge]\n");
        t.insert(at + 18, line + "\n");
        return t;
    };
    auto msg = error_of([&] { parse_config(with_key("api_key = \"sk-live-abcdef\""), dir.path()); });
    CHECK(msg.find("environment variable") != std::string::npos);
    CHECK(msg.find("sk-live") == std::string::npos);
    error_of([&] { parse_config(with_key("api_key = \"${}\""), dir.path()); });
    auto c = parse_config(with_key("api_key = \"${JUDGE_KEY}\""), dir.path());
    CHECK(c.judge.provider.api_key_env == "JUDGE_KEY");
}

TEST_CASE("unknown tables, keys and provider roles are rejected") {
    TempDir dir;
    testing_support::SyntheticRun s;
    auto text = testing_support::write_synthetic_run(dir.path(), s);
    CHECK(error_of([&] { parse_config(text + "[mystery]\nx = 1\n", dir.path()); }).find("mystery") != std::string::npos);
    CHECK(error_of([&] { parse_config(text + "[server]\nprot = 1\n", dir.path()); }).find("prot") != std::string::npos);
    error_of([&] { parse_config(text + "[providers.critic]\nid = \"c\"\n", dir.path()); });
    error_of([&] { parse_config(text, dir.path(), {"pool.size=\"many\""}); });
    error_of([&] { parse_config(text, dir.path(), {"pool.size"}); });
    error_of([&] { parse_config(text, dir.path(), {"reducer.method=\"umap\""}); });
    error_of([&] { parse_config(text, dir.path(), {"reducer.target_dimension=1"}); });
    error_of([&] { parse_config(text, dir.path(), {"providers.annotator_b.id=\"sim-a\""}); });
    error_of([&] { parse_config(text, dir.path(), {"providers.judge.simulate_accuracy=1.5"}); });
    error_of([&] { parse_config(text, dir.path(), {"retrieval.space=\"both\""}); });
    error_of([] { load_config("/nonexistent/annotkit.toml"); });
}

TEST_CASE("overrides and path resolution") {
    TempDir dir;
    auto c = testing_support::synthetic_config(dir.path(), {}, {"pool.size=33", "retrieval.lambda=0.25",
                                                                "run.workers=2", "retrieval.space=\"raw\""});
    CHECK(c.pool_size == 33);
    CHECK(c.mmr.lambda == 0.25);
    CHECK(c.workers == 2);
    CHECK_FALSE(c.retrieval_on_reduced);
    CHECK(c.corpus_path == dir / "corpus.jsonl");
    CHECK(c.run_dir == dir / "run");
    CHECK(c.fixed_clock == "2026-01-01T00:00:00Z");
    CHECK(c.annotation_options().workers == 2);
    CHECK(c.annotation_options().mmr.lambda == 0.25);
}

TEST_CASE("config hash ignores the run directory and server but not results-relevant keys") {
    TempDir dir;
    auto base = testing_support::synthetic_config(dir.path(), {});
    auto moved = load_config(dir / "annotkit.toml", {"run.dir=\"elsewhere\"", "server.port=9"});
    CHECK(moved.config_hash == base.config_hash);
    CHECK(moved.run_dir == dir / "elsewhere");
    auto changed = load_config(dir / "annotkit.toml", {"pool.seed=1"});
    CHECK(changed.config_hash != base.config_hash);
    CHECK(base.config_hash.size() == 64);
}

}
