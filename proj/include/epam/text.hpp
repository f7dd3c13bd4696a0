#pragma once

// Small helpers shared by the CSV and config readers.

#include <string>
#include <string_view>
#include <vector>

namespace epam::text {

std::string_view trim(std::string_view s);

/// Splits on `sep` without quoting support; fields are trimmed.
std::vector<std::string_view> split(std::string_view s, char sep);

/// Splits text into lines, dropping a trailing '\r' from each.
std::vector<std::string_view> lines(std::string_view s);

/// Locale-independent parse of a finite or non-finite double. Throws
/// ValidationError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

/// Shortest representation that round-trips through parse_double.
std::string format_double(double v);

}  // namespace epam::text
