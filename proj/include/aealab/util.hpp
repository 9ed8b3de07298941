#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aealab::util {

/// ASCII-only lowercase copy (non-ASCII bytes pass through untouched).
std::string ascii_lower(std::string_view text);

/// Case-insensitive substring search, ASCII folding only.
bool contains_ci(std::string_view haystack, std::string_view needle);

/// "scheme://rest" with an alphabetic scheme and a non-empty remainder.
bool is_absolute_url(std::string_view url);

/// Current UTC time as RFC 3339 with millisecond precision.
std::string now_rfc3339_utc();

/// FNV-1a 64-bit digest rendered as 16 hex characters.
std::string fnv1a64_hex(std::string_view data);

/// Whole file as a string. Throws Error{io_error} when unreadable.
std::string read_file(const std::string& path);

} // namespace aealab::util
