#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace eda::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercases, collapses runs of whitespace to a single space and strips the ends.
std::string normalize(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Replaces CR/LF with spaces and trims the result.
std::string single_line(std::string_view s);

}  // namespace eda::text
