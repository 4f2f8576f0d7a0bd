// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planwork {

enum class ErrorCode {
    // blueprint
    MalformedStep,
    DuplicateVar,
    BadToolSyntax,
    ForwardReference,
    UndefinedReference,
    CycleDetected,
    // prompting
    MissingPlaceholder,
    EmptyTask,
    // model
    NetworkError,
    ReplayMiss,
    RateLimited,
    ScriptExhausted,
    ContextOverflow,
    InvalidRequest,
    // tools
    UnresolvedReference,
    UnknownTool,
    ParseError,
    DivisionByZero,
    // engine
    PlannerParseFailure,
    NoAction,
    // accounting
    UnknownVocabulary,
    MissingBreakdown,
    // evaluation
    UnparseableVerdict,
    AlignmentMismatch,
    // plumbing
    Config,
    Io,
    Format,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the failure class named in the module contracts.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace planwork
