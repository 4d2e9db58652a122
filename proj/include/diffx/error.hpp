// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffx {

enum class ErrorCode {
    IllegalTransition,
    InvalidArgument,
    EmptyText,
    CacheMiss,
    DimensionMismatch,
    NonFinite,
    DivergenceDetected,
    FormatVersionMismatch,
    ShapeMismatch,
    InfeasibleSchedule,
    BackendFailure,
    BackendUnavailable,
    ProtocolError,
    Timeout,
    MissingSemanticVector,
    NegativeComponent,
    EmptyScenario,
    ParseError,
    UnknownSession,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InfeasibleSchedule: return "InfeasibleSchedule";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MissingSemanticVector: return "MissingSemanticVector";
    case ErrorCode::NegativeComponent: return "NegativeComponent";
    case ErrorCode::EmptyScenario: return "EmptyScenario";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a typed code so callers
/// (HTTP layer, CLI exit codes) can map it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace diffx
