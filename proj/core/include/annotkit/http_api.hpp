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

#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "annotkit/config.hpp"
#include "annotkit/orchestrator.hpp"

namespace annotkit {

/// JSON API under /api/v1 for the review UI. Every mutation goes through the
/// orchestrator, so the same gates apply as on the command line.
class ApiServer {
public:
    ApiServer(Orchestrator& orchestrator, ServerSettings settings);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the port.
    /// Throws PortInUse.
    int bind();
    /// Serves until stop(); bind() first.
    void run();
    /// bind() + run() on a background thread.
    int start();
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

}  // namespace annotkit
