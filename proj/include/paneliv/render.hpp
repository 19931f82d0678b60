#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paneliv/diagnostics.hpp"
#include "paneliv/instrument.hpp"
#include "paneliv/regress.hpp"

namespace paneliv {

enum class OutputFormat { text, csv };

std::string_view to_string(OutputFormat format);
OutputFormat parse_output_format(std::string_view text);

struct TableLayout {
  std::string title;
  // Coefficient names shown, in order. Empty: every coefficient of the first
  // successful column.
  std::vector<std::string> rows;
  std::map<std::string, std::string, std::less<>> row_labels;
  // Statistic keys: n, rows, countries, clusters, periods, r2, cd, cv10, cv15, verdict.
  std::vector<std::string> stats;
  int coefficient_precision = 2;
  int statistic_precision = 3;
  std::vector<std::string> footnotes;
  // Append covariance, weighting and stars notes.
  bool auto_footnotes = true;
};

// Known statistic keys and their row labels.
const std::vector<std::pair<std::string, std::string>>& statistic_keys();

struct TableColumn {
  std::string label;
  std::string panel;
  std::optional<FitResult> fit;
  std::optional<WeakIvReport> weak_iv;
  std::string error;  // non-empty when the spec failed
};

struct RenderedTable {
  struct Row {
    std::string label;
    std::vector<std::string> cells;
    bool heading = false;  // panel caption, no cells
  };

  std::string title;
  std::vector<std::string> headers;
  std::vector<Row> body;
  std::vector<std::string> footnotes;

  std::string to_text() const;
  std::string to_csv() const;
  std::string format(OutputFormat f) const;
};

// Fixed notation that never prints "-0.00".
std::string format_fixed(double value, int precision);
// "b<stars> (se)", e.g. "-1.32** (0.56)".
std::string format_coefficient_cell(double coefficient, double standard_error, double p_value,
                                    int precision);

struct ParsedCell {
  double coefficient = 0.0;
  std::string stars;
  double standard_error = 0.0;
};
// Inverse of format_coefficient_cell; throws SpecError on malformed text.
ParsedCell parse_coefficient_cell(std::string_view cell);

// Throws SpecError for an unknown statistic key or for a row no successful
// column reports.
RenderedTable render_table(const std::vector<TableColumn>& columns, const TableLayout& layout);

RenderedTable render_summary(const std::vector<SummaryRow>& rows, std::string title,
                             int precision = 3);
RenderedTable render_schedule(const InterventionSchedule& schedule, std::string title);

}  // namespace paneliv
