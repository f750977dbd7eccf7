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
#include "annotkit/llm_gateway.hpp"
#include "annotkit/text_util.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with Eigen internals.
#include <httplib.h>

#include <cstdlib>
#include <regex>

namespace annotkit {

using json = nlohmann::json;

namespace {

class HttplibTransport final : public Transport {
public:
    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                      double timeout_s) override {
        static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
        std::smatch match;
        if (!std::regex_match(url, match, kUrl)) {
            fail(ErrorCode::PreconditionViolation, "not an http(s) URL: " + url);
        }
        httplib::Client client(match[1].str());
        auto seconds = static_cast<time_t>(timeout_s);
        auto micros = static_cast<time_t>((timeout_s - static_cast<double>(seconds)) * 1e6);
        client.set_connection_timeout(seconds, micros);
        client.set_read_timeout(seconds, micros);
        client.set_write_timeout(seconds, micros);
        httplib::Headers h;
        for (const auto& [k, v] : headers) {
            h.emplace(k, v);
        }
        std::string path = match[2].matched ? match[2].str() : "/";
        auto result = client.Post(path, h, body, "application/json");
        if (!result) {
            auto err = result.error();
            if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
                fail(ErrorCode::Timeout, url + ": " + httplib::to_string(err));
            }
            fail(ErrorCode::TransportError, url + ": " + httplib::to_string(err));
        }
        return {result->status, result->body};
    }
};

std::string join_url(const std::string& base, const std::string& path) {
    if (!base.empty() && base.back() == '/' && !path.empty() && path.front() == '/') {
        return base + path.substr(1);
    }
    return base + path;
}

}  // namespace

std::shared_ptr<Transport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

HttpBackend::HttpBackend(ProviderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    require(transport_ != nullptr, "http backend needs a transport");
}

HttpHeaders HttpBackend::headers() const {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        fail(ErrorCode::AuthError, config_.provider_id + ": environment variable " +
                                       config_.api_key_env + " is not set");
    }
    return {{"Authorization", std::string("Bearer ") + key}};
}

HttpResponse HttpBackend::checked_post(const std::string& path, const std::string& body) {
    auto response = transport_->post(join_url(config_.base_url, path), headers(), body,
                                     config_.timeout_s);
    const int s = response.status;
    const std::string where = config_.provider_id + " HTTP " + std::to_string(s);
    if (s == 401 || s == 403) {
        fail(ErrorCode::AuthError, where + ": " + response.body.substr(0, 200));
    }
    if (s == 429) {
        fail(ErrorCode::RateLimitExhausted, where);
    }
    if (s == 408) {
        fail(ErrorCode::Timeout, where);
    }
    if (s >= 500) {
        fail(ErrorCode::TransportError, where);
    }
    if (s < 200 || s >= 300) {
        fail(ErrorCode::MalformedResponse, where + ": " + response.body.substr(0, 200));
    }
    return response;
}

ChatResponse HttpBackend::chat(const ChatRequest& request) {
    json body;
    body["model"] = config_.model_name;
    json messages = json::array();
    if (!request.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    body["messages"] = messages;
    body["max_tokens"] = request.max_output_tokens;
    body["temperature"] = config_.temperature;
    if (config_.seed) {
        body["seed"] = *config_.seed;
    }
    auto response = checked_post(config_.chat_path, body.dump());
    try {
        json j = json::parse(response.body);
        ChatResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            out.input_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
            out.output_tokens = j["usage"].value("completion_tokens", std::size_t{0});
        } else {
            out.input_tokens = whitespace_token_count(request.system_text) +
                               whitespace_token_count(request.user_text);
            out.output_tokens = whitespace_token_count(out.text);
        }
        return out;
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedResponse, config_.provider_id + ": " + e.what());
    }
}

std::vector<std::vector<double>> HttpBackend::embed(const std::vector<std::string>& texts) {
    json body;
    body["model"] = config_.model_name;
    body["input"] = texts;
    if (config_.embedding_dimension > 0) {
        body["dimensions"] = config_.embedding_dimension;
    }
    auto response = checked_post(config_.embed_path, body.dump());
    try {
        json j = json::parse(response.body);
        const auto& data = j.at("data");
        std::vector<std::vector<double>> rows(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::size_t index = data[i].value("index", i);
            if (index >= rows.size()) {
                fail(ErrorCode::MalformedResponse, config_.provider_id + ": embedding index out of range");
            }
            rows[index] = data[i].at("embedding").get<std::vector<double>>();
        }
        return rows;
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedResponse, config_.provider_id + ": " + e.what());
    }
}

}  // namespace annotkit
