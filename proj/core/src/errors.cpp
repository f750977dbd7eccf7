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

namespace annotkit {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::RateLimitExhausted: return "RateLimitExhausted";
        case ErrorCode::Timeout: return "TimeoutError";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::UnknownModel: return "UnknownModel";
        case ErrorCode::PreconditionViolation: return "PreconditionViolation";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::UnknownRecord: return "UnknownRecord";
        case ErrorCode::ZeroNorm: return "ZeroNorm";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::NotInPool: return "NotInPool";
        case ErrorCode::PoolSealed: return "PoolSealed";
        case ErrorCode::UnlabeledPool: return "UnlabeledPool";
        case ErrorCode::EmptyRule: return "EmptyRule";
        case ErrorCode::NotApproved: return "NotApproved";
        case ErrorCode::MissingCandidates: return "MissingCandidates";
        case ErrorCode::VersionConflict: return "VersionConflict";
        case ErrorCode::UnresolvedMismatch: return "UnresolvedMismatch";
        case ErrorCode::CoverageMismatch: return "CoverageMismatch";
        case ErrorCode::ConstantVector: return "ConstantVector";
        case ErrorCode::BothEmpty: return "BothEmpty";
        case ErrorCode::DegenerateR: return "DegenerateR";
        case ErrorCode::HumanGatePending: return "HumanGatePending";
        case ErrorCode::StageError: return "StageError";
        case ErrorCode::LockHeld: return "LockHeld";
        case ErrorCode::PortInUse: return "PortInUse";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message) {}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace annotkit
