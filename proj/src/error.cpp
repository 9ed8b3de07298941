#include "aealab/error.hpp"

namespace aealab {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::malformed_json: return "malformed_json";
        case ErrorCode::schema_violation: return "schema_violation";
        case ErrorCode::missing_placeholder: return "missing_placeholder";
        case ErrorCode::empty_user_input: return "empty_user_input";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::duplicate_id: return "duplicate_id";
        case ErrorCode::invalid_category: return "invalid_category";
        case ErrorCode::duplicate_trigger: return "duplicate_trigger";
        case ErrorCode::duplicate_question: return "duplicate_question";
        case ErrorCode::missing_backdoor_table: return "missing_backdoor_table";
        case ErrorCode::upstream_timeout: return "upstream_timeout";
        case ErrorCode::upstream_unavailable: return "upstream_unavailable";
        case ErrorCode::upstream_malformed: return "upstream_malformed";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::empty_results: return "empty_results";
        case ErrorCode::invalid_config: return "invalid_config";
    }
    return "unknown";
}

std::string Error::format(ErrorCode code, const std::string& message, long line) {
    std::string out = to_string(code);
    out += ": ";
    out += message;
    if (line >= 0) {
        out += " (line ";
        out += std::to_string(line);
        out += ")";
    }
    return out;
}

Error::Error(ErrorCode code, std::string message, long line)
    : std::runtime_error(format(code, message, line)), code_(code), line_(line) {}

} // namespace aealab
