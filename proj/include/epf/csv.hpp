#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace epf::csv {

/// Splits one line on commas (no quoting; none of our formats need it).
std::vector<std::string_view> split(std::string_view line);

double parse_double(std::string_view field, std::string_view column, std::size_t row);
long long parse_int(std::string_view field, std::string_view column, std::size_t row);

/// Shortest representation that round-trips exactly.
std::string exact(double v);
/// Fixed notation with at most `decimals` places, trailing zeros trimmed.
std::string fixed(double v, int decimals = 6);

/// Reads all lines of a file, stripping a trailing '\r'. Throws if unreadable.
std::vector<std::string> read_lines(const std::string& path);
/// Writes `content` atomically (temp file + rename), creating parent dirs.
void write_file(const std::string& path, const std::string& content);

}  // namespace epf::csv
