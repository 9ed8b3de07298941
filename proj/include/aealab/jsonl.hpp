#pragma once

#include <json.hpp>

#include <functional>
#include <istream>

namespace aealab::jsonl {

/// Invokes fn(line_number, object) for every non-blank line. Line numbers
/// are 1-based. Throws Error{parse_error} with the offending line when a
/// line is not a JSON object.
void for_each(std::istream& in,
              const std::function<void(std::size_t, const nlohmann::json&)>& fn);

} // namespace aealab::jsonl
