#pragma once

#include "bovi/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bovi::csv {

/// Parse a headerless rectangular grid of decimal numbers.
/// Throws MalformedCsv on non-numeric cells or ragged rows.
Grid<double> read_numeric_grid(const std::filesystem::path& path);

/// Write a numeric grid, one image row per line, round-trip precision.
void write_numeric_grid(const std::filesystem::path& path, const Grid<double>& grid);

/// Split one CSV line on commas. No quoting; fields are trimmed of
/// surrounding whitespace and a trailing '\r' is dropped.
std::vector<std::string> split_row(const std::string& line);

/// Read all non-empty rows of a CSV file.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

double parse_double(const std::string& s, const char* context);
long parse_long(const std::string& s, const char* context);

} // namespace bovi::csv
