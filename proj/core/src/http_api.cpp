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

#include "annotkit/errors.hpp"
#include "annotkit/http_api.hpp"
#include "annotkit/text_util.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with Eigen internals.
#include <httplib.h>

namespace annotkit {

using json = nlohmann::json;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotInPool:
        case ErrorCode::UnknownRecord:
            return 404;
        case ErrorCode::UnknownLabel:
        case ErrorCode::EmptyRule:
        case ErrorCode::PreconditionViolation:
        case ErrorCode::ParseError:
            return 422;
        case ErrorCode::PoolSealed:
        case ErrorCode::VersionConflict:
        case ErrorCode::HumanGatePending:
        case ErrorCode::StageError:
        case ErrorCode::NotApproved:
        case ErrorCode::UnlabeledPool:
        case ErrorCode::UnresolvedMismatch:
            return 409;
        case ErrorCode::LockHeld:
            return 423;
        case ErrorCode::AuthError:
            return 502;
        default:
            return 500;
    }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
    send_json(res, status, {{"error", code}, {"message", msg}});
}

json body_of(const httplib::Request& req) {
    if (trim(req.body).empty()) {
        return json::object();
    }
    json j = json::parse(req.body);
    if (!j.is_object()) {
        throw json::type_error::create(302, "request body must be a JSON object", nullptr);
    }
    return j;
}

std::string actor_of(const httplib::Request& req, const json& body) {
    if (body.contains("actor") && body.at("actor").is_string()) {
        return body.at("actor").get<std::string>();
    }
    return req.get_header_value("X-Actor");
}

std::optional<int> version_of(const json& body) {
    if (body.contains("expected_version") && !body.at("expected_version").is_null()) {
        return body.at("expected_version").get<int>();
    }
    return std::nullopt;
}

json parsed_json(const ParsedLabel& p) {
    return {{"label", p.ok() ? json(p.label) : json(nullptr)}, {"parse_path", to_string(p.parse_path)}};
}

}  // namespace

struct ApiServer::Impl {
    Orchestrator& orch;
    ServerSettings settings;
    httplib::Server server;
    std::mutex mu;

    Impl(Orchestrator& o, ServerSettings s) : orch(o), settings(std::move(s)) {
        // httplib's default also sets SO_REUSEPORT, which lets a second server
        // share a busy port silently.
        server.set_socket_options([](int sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
        routes();
    }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    /// Auth, serialization and error mapping around a handler.
    httplib::Server::Handler wrap(Handler handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            if (!settings.token.empty() &&
                req.get_header_value("Authorization") != "Bearer " + settings.token) {
                send_error(res, 401, "Unauthorized", "missing or wrong bearer token");
                return;
            }
            std::lock_guard<std::mutex> lock(mu);
            try {
                handler(req, res);
            } catch (const Error& e) {
                send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.message());
            } catch (const json::exception& e) {
                send_error(res, 400, "BadRequest", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "InternalError", e.what());
            }
        };
    }

    json pool_items() {
        auto pool = orch.pool();
        if (!pool) {
            fail(ErrorCode::StageError, "no pool has been selected yet");
        }
        const auto& corpus = orch.corpus();
        json items = json::array();
        for (std::size_t i = 0; i < pool->pool_ids.size(); ++i) {
            const auto& id = pool->pool_ids[i];
            auto label = pool->label_of(id);
            json history = json::array();
            for (const auto& e : pool->history) {
                if (e.record_id == id) {
                    history.push_back({{"label", e.label},
                                       {"annotator", e.annotator},
                                       {"timestamp", e.timestamp},
                                       {"version", e.version}});
                }
            }
            items.push_back({{"record_id", id},
                             {"cluster", i},
                             {"text", corpus.record(id).text},
                             {"label", label ? json(*label) : json(nullptr)},
                             {"history", history}});
        }
        return {{"status", to_string(pool->status)},
                {"M", pool->pool_ids.size()},
                {"labeled", pool->labeled.size()},
                {"sealed_by", pool->sealed_by},
                {"classes", orch.config().schema.classes},
                {"items", items}};
    }

    json mismatch_view() {
        const auto& corpus = orch.corpus();
        auto overrides = orch.store().load_override_events();
        std::map<std::string, const OverrideEvent*> latest;
        for (const auto& o : overrides) {
            latest[o.record_id] = &o;
        }
        json items = json::array();
        for (const auto& m : orch.mismatches()) {
            const auto& rec = corpus.record(m.record_id);
            const auto& reference = rec.human_label ? rec.human_label : rec.gold_label;
            json item = {{"record_id", m.record_id},
                         {"text", rec.text},
                         {"cot_a", {{"reasoning", m.cot_a.reasoning}, {"label", parsed_json(m.cot_a.label)}}},
                         {"cot_b", {{"reasoning", m.cot_b.reasoning}, {"label", parsed_json(m.cot_b.label)}}},
                         {"judge",
                          {{"reasoning", m.judge.reasoning},
                           {"verdict", parsed_json(m.judge.verdict)},
                           {"chosen_response", to_string(m.judge.chosen)}}},
                         {"final_label", m.final_label ? json(*m.final_label) : json(nullptr)},
                         {"resolution", to_string(m.resolution)},
                         {"reference_label", reference ? json(*reference) : json(nullptr)},
                         {"flagged", m.judge.verdict.ok() && reference &&
                                         *reference != m.judge.verdict.label}};
            auto o = latest.find(m.record_id);
            if (o != latest.end()) {
                item["override"] = {{"label", o->second->label},
                                    {"actor", o->second->actor},
                                    {"timestamp", o->second->timestamp}};
                item["resolution"] = "human_override";
                item["final_label"] = o->second->label;
            }
            items.push_back(item);
        }
        std::size_t unresolved = 0;
        for (const auto& item : items) {
            unresolved += item.at("final_label").is_null() ? 1 : 0;
        }
        return {{"items", items}, {"unresolved", unresolved}};
    }

    void routes() {
        const std::string api = "/api/v1";

        server.Get(api + "/run/state", wrap([this](const httplib::Request&, httplib::Response& res) {
            auto s = orch.state();
            json j = to_json(s);
            const auto& c = orch.config();
            j["task"] = c.schema.task_name;
            j["classes"] = c.schema.classes;
            j["pool_size"] = c.pool_size;
            j["shots"] = c.mmr.k;
            j["human_gated"] = {"pool_labeled", "prompt_approved", "finalized"};
            send_json(res, 200, j);
        }));

        server.Post(api + "/run/advance", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_of(req);
            auto target = stage_from_string(body.value("target", std::string("finalized")));
            send_json(res, 200, to_json(orch.run_stage(target)));
        }));

        server.Get(api + "/pool/items", wrap([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, pool_items());
        }));

        server.Post(api + "/pool/items", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_of(req);
            auto actor = actor_of(req, body);
            for (const auto& item : body.at("labels")) {
                orch.label_pool_item(item.at("record_id").get<std::string>(),
                                     item.at("label").get<std::string>(), actor);
            }
            send_json(res, 200, pool_items());
        }));

        server.Post(api + R"(/pool/items/([^/]+)/label)",
                    wrap([this](const httplib::Request& req, httplib::Response& res) {
                        auto body = body_of(req);
                        orch.label_pool_item(req.matches[1], body.at("label").get<std::string>(),
                                             actor_of(req, body));
                        send_json(res, 200, pool_items());
                    }));

        server.Post(api + "/pool/seal", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_of(req);
            orch.seal_pool(actor_of(req, body));
            send_json(res, 200, pool_items());
        }));

        server.Get(api + "/prompt", wrap([this](const httplib::Request&, httplib::Response& res) {
            auto prompt = orch.prompt();
            if (!prompt) {
                fail(ErrorCode::StageError, "no prompt has been generated yet");
            }
            json j = to_json(*prompt);
            j["content_hash"] = prompt->content_hash();
            send_json(res, 200, j);
        }));

        server.Post(api + "/prompt/edits", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_of(req);
            auto actor = actor_of(req, body);
            auto version = version_of(body);
            if (body.contains("correction")) {
                orch.add_prompt_correction(body.at("correction").get<std::string>(), actor, version);
            } else {
                orch.edit_prompt_rule(body.at("class").get<std::string>(),
                                      body.at("text").get<std::string>(), actor, version);
            }
            send_json(res, 200, to_json(*orch.prompt()));
        }));

        server.Post(api + "/prompt/approve", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto body = body_of(req);
            orch.approve_prompt(actor_of(req, body), version_of(body));
            send_json(res, 200, to_json(*orch.prompt()));
        }));

        server.Get(api + "/mismatches", wrap([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, mismatch_view());
        }));

        server.Post(api + R"(/mismatches/([^/]+)/override)",
                    wrap([this](const httplib::Request& req, httplib::Response& res) {
                        auto body = body_of(req);
                        orch.override_mismatch(req.matches[1], body.at("label").get<std::string>(),
                                               actor_of(req, body));
                        send_json(res, 200, mismatch_view());
                    }));

        server.Get(api + "/report", wrap([this](const httplib::Request&, httplib::Response& res) {
            auto report = orch.report();
            if (!report) {
                fail(ErrorCode::StageError, "no report yet; the run is not finalized");
            }
            json flagged = json::array();
            if (auto csv = orch.store().read_text("flagged.csv")) {
                auto rows = parse_csv(*csv);
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    flagged.push_back({{"record_id", rows[i].at(0)},
                                       {"human_label", rows[i].at(1)},
                                       {"judge_label", rows[i].at(2)},
                                       {"judge_reasoning", rows[i].at(3)}});
                }
            }
            (*report)["flagged_items"] = flagged;
            send_json(res, 200, *report);
        }));

        server.Get(api + R"(/debug/shots/([^/]+))",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       std::string id = req.matches[1];
                       if (!orch.corpus().contains(id)) {
                           fail(ErrorCode::UnknownRecord, "no record '" + id + "'");
                       }
                       json shots = json::array();
                       for (const auto& s : orch.shots_for(id)) {
                           shots.push_back({{"record_id", s.record_id}, {"text", s.text}, {"label", s.label}});
                       }
                       send_json(res, 200, {{"record_id", id}, {"shots", shots}});
                   }));
    }
};

ApiServer::ApiServer(Orchestrator& orchestrator, ServerSettings settings)
    : impl_(std::make_unique<Impl>(orchestrator, std::move(settings))) {}

ApiServer::~ApiServer() {
    stop();
}

int ApiServer::bind() {
    const auto& s = impl_->settings;
    if (s.port == 0) {
        port_ = impl_->server.bind_to_any_port(s.host);
        if (port_ < 0) {
            fail(ErrorCode::PortInUse, "could not bind any port on " + s.host);
        }
    } else {
        if (!impl_->server.bind_to_port(s.host, s.port)) {
            fail(ErrorCode::PortInUse, s.host + ":" + std::to_string(s.port) + " is not available");
        }
        port_ = s.port;
    }
    return port_;
}

void ApiServer::run() {
    impl_->server.listen_after_bind();
}

int ApiServer::start() {
    int port = bind();
    thread_ = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
    return port;
}

void ApiServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

}  // namespace annotkit
