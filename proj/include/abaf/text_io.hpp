#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace abaf {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

double parse_double(std::string_view s, const std::string& field);
long long parse_int(std::string_view s, const std::string& field);

/// Shortest round-trip decimal representation ("%.17g" trimmed).
std::string format_double(double v);
/// Fixed number of decimals, used for report tables.
std::string format_fixed(double v, int decimals);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// CSV cell quoting for names containing separators or quotes.
std::string csv_escape(std::string_view cell);
std::string csv_row(const std::vector<std::string>& cells);
/// Splits one CSV record, honoring double-quoted cells.
std::vector<std::string> parse_csv_row(std::string_view line);

}  // namespace abaf
