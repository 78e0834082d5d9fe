#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fincon {

/// Comma-separated table with a header row. Cells are trimmed and stripped of
/// surrounding double quotes; embedded commas inside quotes are honoured.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number in the source for each row (for error messages).
  std::vector<std::size_t> lines;

  /// Column position by name, or -1.
  int column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(std::string_view line);

/// True for empty, "NA", "NaN" and "nan" cells.
bool is_missing_token(std::string_view cell);

/// Parses a numeric cell; missing tokens give NaN. Throws ValidationError on
/// anything else that is not a number.
double parse_number(std::string_view cell);

/// Shortest round-trip representation (`%.17g` trimmed), "NA" for NaN.
std::string format_number(double value);

/// Fixed number of significant digits, "NA" for NaN.
std::string format_number(double value, int significant);

}  // namespace fincon
