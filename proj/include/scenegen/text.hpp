#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and renderers.
namespace scenegen::text {

std::string lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Shortest decimal that round-trips, without a trailing ".0" for integers.
std::string format_number(double value);

/// Lowercase words joined by '_' ("Kuka Robot KR125" -> "kuka_robot_kr125").
std::string snake_case(std::string_view s);

/// Hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);

} // namespace scenegen::text
