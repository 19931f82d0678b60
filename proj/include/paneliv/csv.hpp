#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace paneliv::csv {

// A parsed comma-separated table. Rows keep their 1-based source line number
// so errors can point at the offending record.
struct Table {
  std::vector<std::string> header;
  struct Row {
    std::size_t line = 0;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;

  // Index of `column` in the header, or throws DataError naming the file.
  std::size_t column_index(std::string_view column, std::string_view source) const;
  bool has_column(std::string_view column) const;
};

Table read(std::istream& in, std::string_view source = "<stream>");
Table read_file(const std::filesystem::path& path);

// Quotes a cell when it contains a comma, quote or newline.
std::string escape(std::string_view cell);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

// Shortest round-trippable decimal representation; empty for NaN.
std::string format_real(double value);

// Parses a real; empty or whitespace-only cells yield NaN. Throws DataError
// with `context` on garbage.
double parse_real(std::string_view cell, std::string_view context);
int parse_int(std::string_view cell, std::string_view context);

}  // namespace paneliv::csv
