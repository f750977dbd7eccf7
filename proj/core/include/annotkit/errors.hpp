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

#include <stdexcept>
#include <string>
#include <string_view>

namespace annotkit {

enum class ErrorCode {
    // gateway
    AuthError,
    RateLimitExhausted,
    Timeout,
    MalformedResponse,
    TransportError,
    UnknownModel,
    // shared
    PreconditionViolation,
    DimensionMismatch,
    NonFinite,
    IoError,
    // corpus_store
    ParseError,
    DuplicateId,
    UnknownLabel,
    UnknownRecord,
    // geometry
    ZeroNorm,
    RankDeficient,
    KTooLarge,
    // exemplar_pool / retrieval
    NotInPool,
    PoolSealed,
    UnlabeledPool,
    // prompting
    EmptyRule,
    NotApproved,
    MissingCandidates,
    VersionConflict,
    // annotation
    UnresolvedMismatch,
    // metrics
    CoverageMismatch,
    ConstantVector,
    BothEmpty,
    DegenerateR,
    // orchestrator
    HumanGatePending,
    StageError,
    LockHeld,
    PortInUse,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures are reported through this exception. `code()` is the
/// stable, machine-checkable part; `what()` carries the human detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    /// what() without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        fail(ErrorCode::PreconditionViolation, message);
    }
}

}  // namespace annotkit
