#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace burst {

// Shortest decimal form that parses back to the exact same double.
std::string format_double(double value);

std::string ascii_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Unsigned decimal integer, digits only. Rejects empty input, signs,
// leading junk, and overflow.
std::optional<std::int64_t> parse_uint(std::string_view s);

// Escapes every byte outside [A-Za-z0-9._-]. Used for cache file names.
std::string percent_encode(std::string_view raw);
std::optional<std::string> percent_decode(std::string_view encoded);

}  // namespace burst
