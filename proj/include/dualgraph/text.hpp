#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dualgraph::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
// Splits on newlines and strips a trailing '\r' from each line. A final
// newline yields a trailing empty line, as with split().
std::vector<std::string> split_lines(std::string_view s);

// Whitespace-delimited word count; the project-wide token estimate.
std::size_t word_count(std::string_view s);

// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

// Maximal runs of ASCII alphanumerics, lowercased.
std::vector<std::string> alnum_tokens(std::string_view s);

std::uint64_t fnv1a(std::string_view s);
std::string hex_digest(std::string_view s);

std::string format_decimal(double v);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace dualgraph::text
