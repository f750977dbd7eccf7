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

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>

#include "annotkit/config.hpp"
#include "annotkit/errors.hpp"
#include "annotkit/http_api.hpp"
#include "annotkit/orchestrator.hpp"
#include "annotkit/simulation.hpp"
#include "annotkit/text_util.hpp"

using namespace annotkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGate = 2;
constexpr int kExitStage = 3;

struct Common {
    std::string config_path = "annotkit.toml";
    std::vector<std::string> sets;
    std::string run_dir;
    std::string actor;
};

RunConfig load(const Common& c) {
    auto overrides = c.sets;
    if (!c.run_dir.empty()) {
        overrides.push_back("run.dir=\"" + c.run_dir + "\"");
    }
    return load_config(c.config_path, overrides);
}

void print_state(const RunState& s) {
    std::cout << "stage: " << to_string(s.stage) << "\n";
    std::cout << "calls: " << s.usage.calls << " (input tokens " << s.usage.input_tokens
              << ", output tokens " << s.usage.output_tokens << ")\n";
}

int run_to(const Common& c, Stage target) {
    Orchestrator orch(load(c));
    print_state(orch.run_stage(target));
    return kExitOk;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::string item;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!trim(item).empty()) {
                out.push_back(static_cast<std::size_t>(std::stoul(trim(item))));
            }
            item.clear();
        } else {
            item += ch;
        }
    }
    return out;
}

ApiServer* g_server = nullptr;

void handle_signal(int) {
    if (g_server != nullptr) {
        g_server->stop();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"annotkit: human-in-the-loop LLM annotation pipeline"};
    app.require_subcommand(1);
    Common common;
    app.add_option("-c,--config", common.config_path, "Run configuration file")->capture_default_str();
    app.add_option("--set", common.sets, "Override a config key, e.g. --set pool.size=40");
    app.add_option("--run-dir", common.run_dir, "Override [run] dir");
    app.add_option("--actor", common.actor, "Identity recorded for human actions");

    std::function<int()> action;
    auto verb = [&](const std::string& name, const std::string& help, Stage stage) {
        app.add_subcommand(name, help)->callback([&action, &common, stage] {
            action = [&common, stage] { return run_to(common, stage); };
        });
    };
    verb("ingest", "Load the corpus into the run directory", Stage::ingested);
    verb("embed", "Embed every record", Stage::embedded);
    verb("reduce", "Reduce embeddings (PCA or external)", Stage::reduced);
    verb("select-pool", "Select the exemplar pool with k-means", Stage::pool_selected);
    verb("gen-prompt", "Generate per-class rules from the labeled pool", Stage::prompt_generated);
    verb("annotate", "Coarse annotation with both annotators", Stage::coarse_done);
    verb("consensus", "CoT + judge on the mismatch set", Stage::consensus_done);

    std::string target = "finalized";
    auto* run = app.add_subcommand("run", "Run all stages up to a target");
    run->add_option("--target", target, "Target stage")->capture_default_str();
    run->callback([&] {
        action = [&] { return run_to(common, stage_from_string(target)); };
    });

    std::string out_path;
    auto* export_pool = app.add_subcommand("export-pool", "Write the pool as CSV for labeling");
    export_pool->add_option("-o,--out", out_path, "Output file (stdout if omitted)");
    export_pool->callback([&] {
        action = [&] {
            Orchestrator orch(load(common));
            auto csv = orch.export_pool_csv();
            if (out_path.empty()) {
                std::cout << csv;
            } else {
                write_file_atomic(out_path, csv);
            }
            return kExitOk;
        };
    });

    std::string labels_path;
    bool seal = false;
    auto* import_labels = app.add_subcommand("import-labels", "Import pool labels from CSV");
    import_labels->add_option("-f,--file", labels_path, "CSV with record_id,text,label")->required();
    import_labels->add_flag("--seal", seal, "Seal the pool after importing");
    import_labels->callback([&] {
        action = [&] {
            Orchestrator orch(load(common));
            auto n = orch.import_pool_labels(read_file(labels_path), common.actor);
            std::cout << "imported " << n << " labels\n";
            if (seal) {
                orch.seal_pool(common.actor);
                std::cout << "pool sealed by " << common.actor << "\n";
            }
            return kExitOk;
        };
    });

    int expected_version = 0;
    auto* approve = app.add_subcommand("approve-prompt", "Approve the generated prompt");
    approve->add_option("--expected-version", expected_version, "Fail if the prompt changed since");
    approve->callback([&] {
        action = [&] {
            Orchestrator orch(load(common));
            std::optional<int> v;
            if (expected_version > 0) {
                v = expected_version;
            }
            orch.approve_prompt(common.actor, v);
            std::cout << "prompt approved by " << common.actor << "\n";
            return kExitOk;
        };
    });

    std::vector<std::string> overrides;
    auto* finalize_cmd = app.add_subcommand("finalize", "Apply overrides and write final labels");
    finalize_cmd->add_option("--override", overrides, "record_id=label, repeatable");
    finalize_cmd->callback([&] {
        action = [&] {
            Orchestrator orch(load(common));
            for (const auto& o : overrides) {
                auto eq = o.find('=');
                if (eq == std::string::npos) {
                    fail(ErrorCode::PreconditionViolation, "override '" + o + "' is not id=label");
                }
                orch.override_mismatch(o.substr(0, eq), o.substr(eq + 1), common.actor);
            }
            print_state(orch.run_stage(Stage::finalized));
            return kExitOk;
        };
    });

    bool as_json = false;
    auto* report = app.add_subcommand("report", "Print the metrics report");
    report->add_flag("--json", as_json, "Print report.json");
    report->callback([&] {
        action = [&] {
            Orchestrator orch(load(common));
            auto r = orch.report();
            if (!r) {
                fail(ErrorCode::StageError, "no report yet; run finalize first");
            }
            std::cout << (as_json ? r->dump(2) + "\n" : format_report_text(*r));
            return kExitOk;
        };
    });

    std::string sizes = "20,40,60,80,100";
    auto* sweep = app.add_subcommand("sweep", "Pool-size sweep against gold labels");
    sweep->add_option("--M", sizes, "Comma-separated pool sizes")->capture_default_str();
    sweep->add_flag("--json", as_json, "Print JSON rows");
    sweep->callback([&] {
        action = [&] {
            auto config = load(common);
            auto rows = sweep_exemplars(config, parse_sizes(sizes));
            std::cout << (as_json ? to_json(rows).dump(2) + "\n"
                                  : format_sweep_table(rows, config.schema.classes));
            bool any_error = std::any_of(rows.begin(), rows.end(),
                                         [](const SweepRow& r) { return !r.report.has_value(); });
            return any_error ? kExitStage : kExitOk;
        };
    });

    SyntheticCorpusSpec synth_spec;
    std::string synth_classes;
    auto* synth = app.add_subcommand("synth", "Write a synthetic labeled corpus (JSONL)");
    synth->add_option("--records", synth_spec.records, "Record count")->capture_default_str();
    synth->add_option("--seed", synth_spec.seed, "Generator seed")->capture_default_str();
    synth->add_option("--classes", synth_classes, "Comma-separated class names");
    synth->add_option("-o,--out", out_path, "Output file (stdout if omitted)");
    synth->callback([&] {
        action = [&] {
            if (!synth_classes.empty()) {
                synth_spec.classes.clear();
                std::string item;
                for (char ch : synth_classes + ",") {
                    if (ch != ',') {
                        item += ch;
                        continue;
                    }
                    if (!trim(item).empty()) {
                        synth_spec.classes.push_back(trim(item));
                    }
                    item.clear();
                }
            }
            auto text = synthetic_jsonl(synthetic_records(synth_spec));
            if (out_path.empty()) {
                std::cout << text;
            } else {
                write_file_atomic(out_path, text);
            }
            return kExitOk;
        };
    });

    std::string host;
    int port = -1;
    std::string token;
    auto* serve = app.add_subcommand("serve", "Serve the review API");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--token", token, "Shared bearer token");
    serve->callback([&] {
        action = [&] {
            auto config = load(common);
            auto settings = config.server;
            if (!host.empty()) settings.host = host;
            if (port >= 0) settings.port = port;
            if (!token.empty()) settings.token = token;
            Orchestrator orch(config);
            ApiServer server(orch, settings);
            int bound = server.bind();
            std::cout << "serving http://" << settings.host << ":" << bound << "/api/v1" << std::endl;
            g_server = &server;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            server.run();
            g_server = nullptr;
            return kExitOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return action();
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == ErrorCode::HumanGatePending ? kExitGate : kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
}
