#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small helpers shared by the line-oriented text formats.
namespace greybox::text {

// Double-quoted with backslash escapes for '"' and '\'.
std::string quote(std::string_view s);

// Splits on whitespace; double-quoted tokens may contain spaces. Throws
// std::invalid_argument on an unterminated quote.
std::vector<std::string> tokenize(std::string_view line);

std::string_view trim(std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Fixed-point with `digits` decimals.
std::string format_fixed(double v, int digits);

// Strict full-token parses; throw std::invalid_argument on failure.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace greybox::text
