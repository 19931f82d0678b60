#include "paneliv/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "paneliv/error.hpp"

namespace paneliv::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one record. Quoted fields may contain commas and doubled quotes but
// not newlines; none of our formats need multi-line cells.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no,
                                      std::string_view source) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"' && trim(cell).empty()) {
      cell.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cell : std::string(trim(cell)));
      cell.clear();
      was_quoted = false;
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) {
    throw DataError(fmt::format("{}:{}: unterminated quoted field", source, line_no));
  }
  cells.push_back(was_quoted ? cell : std::string(trim(cell)));
  return cells;
}

}  // namespace

std::size_t Table::column_index(std::string_view column, std::string_view source) const {
  auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) {
    throw DataError(fmt::format("{}: missing mandatory column '{}'", source, column));
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(std::string_view column) const {
  return std::find(header.begin(), header.end(), column) != header.end();
}

Table read(std::istream& in, std::string_view source) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto cells = split_record(line, line_no, source);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(fmt::format("{}:{}: expected {} fields, found {}", source, line_no,
                                  table.header.size(), cells.size()));
    }
    table.rows.push_back({line_no, std::move(cells)});
  }
  if (!have_header) throw DataError(fmt::format("{}: empty file, no header row", source));
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read(in, path.string());
}

std::string escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << escape(cells[i]);
  }
  out << '\n';
}

std::string format_real(double value) {
  if (std::isnan(value)) return {};
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view cell, std::string_view context) {
  cell = trim(cell);
  if (cell.empty()) return std::nan("");
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw DataError(fmt::format("{}: cannot parse '{}' as a real number", context, cell));
  }
  return v;
}

int parse_int(std::string_view cell, std::string_view context) {
  cell = trim(cell);
  int v = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw DataError(fmt::format("{}: cannot parse '{}' as an integer", context, cell));
  }
  return v;
}

}  // namespace paneliv::csv
