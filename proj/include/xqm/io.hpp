#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xqm::io {

struct TsvRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct TsvTable {
  std::vector<std::string> header;
  std::vector<TsvRow> rows;
};

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Parses TSV text. Lines starting with '#' carry metadata and are skipped.
/// The first remaining line must equal `expected_header` exactly; every row
/// must have the same column count (ParseError naming the line otherwise).
TsvTable parse_tsv(std::string_view text, const std::vector<std::string>& expected_header,
                   std::string_view source_name);

/// Header-agnostic variant: the first non-metadata line becomes the header.
TsvTable parse_tsv_any(std::string_view text, std::string_view source_name);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over `path` on success.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view what);

/// Percent-escapes ':', ';', tab, newline, carriage return and '%'.
std::string percent_escape(std::string_view text);
std::string percent_unescape(std::string_view text);

/// Escapes tab/newline/backslash so free text fits in one TSV cell.
std::string tsv_cell(std::string_view text);

std::string sha256_hex(std::string_view data);

}  // namespace xqm::io
