#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fnet::text {

/// Full-precision decimal rendering used by every tabular writer (17 significant digits).
std::string format_double(double v);

/// Shortest decimal string that round-trips to the same double.
std::string format_shortest(double v);

/// Splits one comma-separated record. No quoting: the formats never need it.
std::vector<std::string> split_csv(std::string_view line);

/// Parses a full decimal field; throws ParseError naming `source` and `line` otherwise.
double parse_double(std::string_view field, const std::string& source, std::size_t line);

/// A non-comment, non-blank line of a text file with its 1-based line number.
struct Line {
  std::size_t number;
  std::string text;
};

/// Reads a text file, dropping blank lines and lines starting with '#'; strips trailing CR.
std::vector<Line> read_lines(const std::filesystem::path& path);

/// Same as read_lines but over an in-memory buffer.
std::vector<Line> split_lines(std::string_view content);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

bool is_iso_date(std::string_view s);

std::string trim(std::string_view s);

}  // namespace fnet::text
