#pragma once

#include <stdexcept>
#include <string>

namespace aealab {

enum class ErrorCode {
    malformed_json,
    schema_violation,
    missing_placeholder,
    empty_user_input,
    parse_error,
    duplicate_id,
    invalid_category,
    duplicate_trigger,
    duplicate_question,
    missing_backdoor_table,
    upstream_timeout,
    upstream_unavailable,
    upstream_malformed,
    io_error,
    empty_results,
    invalid_config,
};

const char* to_string(ErrorCode code) noexcept;

/// Structured error used across every module. Parsers and loaders throw
/// this (never anything else) so callers can branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, long line = -1);

    ErrorCode code() const noexcept { return code_; }

    /// 1-based input line for dataset loaders, -1 when not applicable.
    long line() const noexcept { return line_; }

private:
    static std::string format(ErrorCode code, const std::string& message, long line);

    ErrorCode code_;
    long line_;
};

} // namespace aealab
