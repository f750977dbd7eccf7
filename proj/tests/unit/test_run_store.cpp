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

#include "annotkit/errors.hpp"
#include "annotkit/run_store.hpp"
#include "annotkit/text_util.hpp"
#include "support/test_support.hpp"

using namespace annotkit;
using testing_support::TempDir;

TEST_SUITE("run_store") {

TEST_CASE("stage order and gates") {
    Stage s = Stage::none;
    std::vector<Stage> gated;
    while (s != Stage::finalized) {
        Stage next = next_stage(s);
        CHECK(static_cast<int>(next) == static_cast<int>(s) + 1);
        CHECK(stage_from_string(to_string(next)) == next);
        if (is_human_gated(next)) gated.push_back(next);
        s = next;
    }
    CHECK(gated == std::vector<Stage>{Stage::pool_labeled, Stage::prompt_approved, Stage::finalized});
    CHECK_THROWS_AS(next_stage(Stage::finalized), Error);
    CHECK_THROWS_AS(stage_from_string("halfway"), Error);
}

TEST_CASE("state round-trips and missing state is the empty run") {
    TempDir dir;
    RunStore store(dir.path());
    CHECK(store.load_state().stage == Stage::none);
    RunState s;
    s.stage = Stage::coarse_done;
    s.timestamps = {{"ingested", "t0"}};
    s.usage = {3, 30, 3};
    s.usage_by_tag = {{"coarse", {3, 30, 3}}};
    s.pending_gate = "prompt_approved";
    s.pending_action = "approve the prompt";
    store.save_state(s);
    auto back = store.load_state();
    CHECK(back.stage == Stage::coarse_done);
    CHECK(back.timestamps == s.timestamps);
    CHECK(back.usage == s.usage);
    CHECK(back.usage_by_tag == s.usage_by_tag);
    CHECK(back.pending_gate == s.pending_gate);
    CHECK(back.pending_action == s.pending_action);
    write_file_atomic(dir / "state.json", "{");
    CHECK_THROWS_AS(store.load_state(), Error);
}

TEST_CASE("appended records: last line per id wins and torn tails are ignored") {
    TempDir dir;
    RunStore store(dir.path());
    CHECK(store.load_annotations().empty());
    AnnotationRecord a;
    a.record_id = "r1";
    a.label_a = {"approve", "<approve>", ParsePath::delimited};
    a.label_b = {"oppose", "<oppose>", ParsePath::delimited};
    AnnotationRecord b = a;
    b.record_id = "r2";
    store.append_annotations({a, b});
    a.label_b = a.label_a;
    a.agreed = true;
    store.append_annotations({a});
    append_file(dir / "annotations.jsonl", "{\"record_id\": \"r3\", \"tor");
    auto loaded = store.load_annotations();
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == a);
    CHECK(loaded[1] == b);
    store.save_annotations({b});
    CHECK(store.load_annotations() == std::vector<AnnotationRecord>{b});

    MismatchRecord m;
    m.record_id = "r2";
    store.append_mismatches({m});
    m.final_label = "oppose";
    m.resolution = Resolution::human_override;
    store.append_mismatches({m});
    CHECK(store.load_mismatches() == std::vector<MismatchRecord>{m});
}

TEST_CASE("overrides, map trace and ledger") {
    TempDir dir;
    RunStore store(dir.path());
    store.append_override({"r1", "approve", "alice", "t1"});
    store.append_override({"r2", "oppose", "alice", "t2"});
    store.append_override({"r1", "oppose", "bob", "t3"});
    CHECK(store.load_override_events().size() == 3);
    CHECK(store.load_overrides() == std::map<std::string, std::string>{{"r1", "oppose"}, {"r2", "oppose"}});

    store.append_map_trace({"p1", "approve", "why\nmultiline"});
    store.append_map_trace({"p2", "oppose", "because"});
    CHECK(store.load_map_trace() == std::vector<TraceEntry>{{"p1", "approve", "why\nmultiline"}, {"p2", "oppose", "because"}});

    store.append_ledger({{"a", "m", "coarse", 1, 2}, {"b", "m", "consensus", 3, 4}});
    auto ledger = store.load_ledger();
    REQUIRE(ledger.size() == 2);
    CHECK(ledger[1].tag == "consensus");
}

TEST_CASE("artifacts") {
    TempDir dir;
    RunStore store(dir.path());
    CHECK_FALSE(store.read_text("final.jsonl"));
    CHECK(store.artifact_digest("final.jsonl").empty());
    store.write_text("final.jsonl", "abc");
    CHECK(store.read_text("final.jsonl") == "abc");
    CHECK(store.artifact_digest("final.jsonl") == sha256_hex("abc"));
    CHECK_FALSE(store.load_pool());
    CHECK_FALSE(store.load_prompt());
}

}
