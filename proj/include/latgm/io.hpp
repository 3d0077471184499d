#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "latgm/matrix.hpp"

namespace latgm::io {

// Shortest text that parses back to the same double; infinity prints as "inf".
std::string format_double(double v);
// Accepts decimal and scientific notation plus "inf"/"+inf"/"-inf".
// Throws ConfigError on anything else.
double parse_double(std::string_view text);

// Plain CSV, one row per line, no header.
DenseMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);
std::string matrix_to_csv(const DenseMatrix& m);
DenseMatrix matrix_from_csv(std::string_view text);

// One non-negative integer per line.
std::vector<std::size_t> read_index_list(const std::filesystem::path& path);
void write_index_list(const std::filesystem::path& path, const std::vector<std::size_t>& idx);

// Flat key=value text; blank lines and lines starting with '#' are skipped.
// Ordered map so that writing is deterministic.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view s);

}  // namespace latgm::io
