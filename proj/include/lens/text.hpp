#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lens {

/// Shortest representation that reads back as the same double; "nan" for NaN.
std::string format_double(double v);
/// Fixed notation with `decimals` digits.
std::string format_fixed(double v, int decimals);
/// Accepts anything from_chars accepts plus "nan"; rejects trailing junk.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::vector<std::string_view> split_on(std::string_view line, char delim);
std::vector<std::string_view> split_lines(std::string_view text);

std::string read_file(const std::string& path);
/// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace lens
