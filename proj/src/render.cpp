#include "paneliv/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "paneliv/csv.hpp"
#include "paneliv/error.hpp"

namespace paneliv {

std::string_view to_string(OutputFormat format) {
  return format == OutputFormat::csv ? "csv" : "text";
}

OutputFormat parse_output_format(std::string_view text) {
  if (text == "text") return OutputFormat::text;
  if (text == "csv") return OutputFormat::csv;
  throw SpecError(fmt::format("output format must be text or csv, got '{}'", text));
}

const std::vector<std::pair<std::string, std::string>>& statistic_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"n", "Number of Observations"},
      {"rows", "Data Rows"},
      {"countries", "Number of Countries"},
      {"clusters", "Clusters"},
      {"periods", "Periods"},
      {"r2", "R-squared"},
      {"cd", "Cragg-Donald F-Statistic"},
      {"cv10", "Critical value (10% maximal size)"},
      {"cv15", "Critical value (15% maximal size)"},
      {"verdict", "Weak-instrument verdict"},
  };
  return keys;
}

std::string format_fixed(double value, int precision) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  auto s = fmt::format("{:.{}f}", value, precision);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string format_coefficient_cell(double coefficient, double standard_error, double p_value,
                                    int precision) {
  const auto stars = std::isnan(p_value) ? std::string() : significance_stars(p_value);
  return fmt::format("{}{} ({})", format_fixed(coefficient, precision), stars,
                     format_fixed(standard_error, precision));
}

ParsedCell parse_coefficient_cell(std::string_view cell) {
  auto fail = [&] { throw SpecError(fmt::format("malformed coefficient cell '{}'", cell)); };
  const auto open = cell.find(" (");
  if (open == std::string_view::npos || cell.back() != ')') fail();
  auto head = cell.substr(0, open);
  auto se = cell.substr(open + 2, cell.size() - open - 3);
  ParsedCell out;
  while (!head.empty() && head.back() == '*') {
    out.stars.push_back('*');
    head.remove_suffix(1);
  }
  try {
    std::size_t used = 0;
    out.coefficient = std::stod(std::string(head), &used);
    if (used != head.size()) fail();
    out.standard_error = std::stod(std::string(se), &used);
    if (used != se.size()) fail();
  } catch (const std::logic_error&) {
    fail();
  }
  return out;
}

namespace {

std::string integral_or_real(double v, int precision) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return fmt::format("{:.0f}", v);
  return format_fixed(v, precision);
}

std::string statistic_cell(const TableColumn& col, std::string_view key, const TableLayout& layout) {
  if (!col.fit) return {};
  const auto& f = *col.fit;
  const int sp = layout.statistic_precision;
  if (key == "n") return integral_or_real(f.n_observations, sp);
  if (key == "rows") return std::to_string(f.n_rows);
  if (key == "countries") return std::to_string(f.n_countries);
  if (key == "clusters") return f.n_clusters ? std::to_string(f.n_clusters) : std::string();
  if (key == "periods") return std::to_string(f.n_periods);
  if (key == "r2") return format_fixed(f.r_squared, sp);
  if (!col.weak_iv) return {};
  const auto& w = *col.weak_iv;
  if (key == "cd") return format_fixed(w.cragg_donald_f, sp);
  auto cv = [&](MaximalSize size) {
    auto it = w.critical_values.find(size);
    return it == w.critical_values.end() ? std::string("n/a")
                                         : format_fixed(it->second, layout.coefficient_precision);
  };
  if (key == "cv10") return cv(MaximalSize::p10);
  if (key == "cv15") return cv(MaximalSize::p15);
  if (key == "verdict") return std::string(to_string(w.verdict));
  return {};
}

std::string weighting_text(const FitResult& f) {
  if (f.weight.empty()) return "unweighted";
  return fmt::format("frequency-weighted by {} (N is the weight sum)", f.weight);
}

std::string column_name(const TableColumn& col, std::size_t i) {
  return col.label.empty() ? fmt::format("({})", i + 1) : col.label;
}

void auto_notes(const std::vector<TableColumn>& columns, const TableLayout& layout,
                std::vector<std::string>& out) {
  std::vector<std::string> per_column;
  bool any_fit = false;
  bool any_cd = false;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& col = columns[i];
    if (!col.fit) continue;
    any_fit = true;
    any_cd = any_cd || col.weak_iv.has_value();
    per_column.push_back(fmt::format("{} standard errors; {}", col.fit->vcov.describe(),
                                     weighting_text(*col.fit)));
  }
  if (any_fit) {
    const bool uniform = std::all_of(per_column.begin(), per_column.end(),
                                     [&](const auto& s) { return s == per_column.front(); });
    if (uniform) {
      auto s = per_column.front();
      s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
      out.push_back(fmt::format("{}. Standard errors in parentheses.", s));
    } else {
      std::size_t k = 0;
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (!columns[i].fit) continue;
        out.push_back(fmt::format("{}: {}.", column_name(columns[i], i), per_column[k++]));
      }
      out.push_back("Standard errors in parentheses.");
    }
  }
  const bool cd_shown = std::any_of(layout.stats.begin(), layout.stats.end(),
                                    [](const auto& k) { return k == "cd"; });
  if (any_cd && cd_shown) {
    out.push_back("Cragg-Donald F is computed under homoskedasticity; "
                  "critical values are Stock-Yogo 2SLS maximal size.");
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!columns[i].error.empty()) {
      out.push_back(fmt::format("{}: estimation failed: {}", column_name(columns[i], i),
                                columns[i].error));
    }
  }
  out.push_back("* p<.1, ** p<.05, *** p<.01");
}

}  // namespace

RenderedTable render_table(const std::vector<TableColumn>& columns, const TableLayout& layout) {
  if (columns.empty()) throw SpecError("nothing to render: no result columns");
  for (const auto& key : layout.stats) {
    const auto& known = statistic_keys();
    if (std::none_of(known.begin(), known.end(), [&](const auto& k) { return k.first == key; })) {
      throw SpecError(fmt::format("layout references unknown statistic '{}'", key));
    }
  }

  auto rows = layout.rows;
  const TableColumn* first_ok = nullptr;
  for (const auto& c : columns) {
    if (c.fit) {
      first_ok = &c;
      break;
    }
  }
  if (rows.empty() && first_ok) rows = first_ok->fit->names;
  if (first_ok) {
    for (const auto& r : rows) {
      bool found = std::any_of(columns.begin(), columns.end(),
                               [&](const auto& c) { return c.fit && c.fit->has(r); });
      if (!found) throw SpecError(fmt::format("layout row '{}' matches no coefficient", r));
    }
  }

  // Panels in order of first appearance; each becomes a block of rows.
  std::vector<std::string> panels;
  for (const auto& c : columns) {
    if (std::find(panels.begin(), panels.end(), c.panel) == panels.end()) panels.push_back(c.panel);
  }
  std::vector<std::vector<std::size_t>> members(panels.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    auto p = std::find(panels.begin(), panels.end(), columns[i].panel) - panels.begin();
    members[static_cast<std::size_t>(p)].push_back(i);
  }
  std::size_t width = 0;
  for (const auto& m : members) width = std::max(width, m.size());

  RenderedTable t;
  t.title = layout.title;
  t.headers.assign(width, "");
  for (std::size_t j = 0; j < members.front().size(); ++j) {
    t.headers[j] = column_name(columns[members.front()[j]], members.front()[j]);
  }

  auto label_of = [&](const std::string& name) {
    auto it = layout.row_labels.find(name);
    return it == layout.row_labels.end() ? name : it->second;
  };

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& idx = members[p];
    if (!panels[p].empty()) t.body.push_back({panels[p], {}, true});
    std::vector<std::string> own(width, "");
    for (std::size_t j = 0; j < idx.size(); ++j) own[j] = column_name(columns[idx[j]], idx[j]);
    if (p > 0 && own != t.headers) t.body.push_back({"", own, false});

    for (const auto& r : rows) {
      RenderedTable::Row row{label_of(r), std::vector<std::string>(width), false};
      bool any = false;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto& c = columns[idx[j]];
        if (!c.error.empty()) {
          row.cells[j] = "error";
          continue;
        }
        if (!c.fit || !c.fit->has(r)) continue;
        const auto k = c.fit->index_of(r);
        row.cells[j] = format_coefficient_cell(c.fit->coefficients[static_cast<Eigen::Index>(k)],
                                               c.fit->standard_errors[static_cast<Eigen::Index>(k)],
                                               c.fit->p_values[static_cast<Eigen::Index>(k)],
                                               layout.coefficient_precision);
        any = true;
      }
      if (any || panels.size() == 1) t.body.push_back(std::move(row));
    }
    for (const auto& key : layout.stats) {
      auto it = std::find_if(statistic_keys().begin(), statistic_keys().end(),
                             [&](const auto& k) { return k.first == key; });
      RenderedTable::Row row{it->second, std::vector<std::string>(width), false};
      for (std::size_t j = 0; j < idx.size(); ++j) {
        row.cells[j] = statistic_cell(columns[idx[j]], key, layout);
      }
      t.body.push_back(std::move(row));
    }
  }

  if (layout.auto_footnotes) auto_notes(columns, layout, t.footnotes);
  t.footnotes.insert(t.footnotes.end(), layout.footnotes.begin(), layout.footnotes.end());
  return t;
}

RenderedTable render_summary(const std::vector<SummaryRow>& rows, std::string title,
                             int precision) {
  RenderedTable t;
  t.title = std::move(title);
  t.headers = {"Observations", "Mean", "Standard Deviation", "Minimum", "Maximum"};
  bool degenerate = false;
  for (const auto& r : rows) {
    t.body.push_back({r.label,
                      {std::to_string(r.count), format_fixed(r.mean, precision),
                       format_fixed(r.sd, precision), format_fixed(r.min, precision),
                       format_fixed(r.max, precision)},
                      false});
    degenerate = degenerate || r.degenerate;
  }
  if (degenerate) t.footnotes.push_back("Rows with a single observation report a zero standard deviation.");
  return t;
}

RenderedTable render_schedule(const InterventionSchedule& schedule, std::string title) {
  RenderedTable t;
  t.title = std::move(title);
  t.headers = {"Intervention Year"};
  for (const auto& [disease, year] : schedule.intervention_year) {
    t.body.push_back({disease, {std::to_string(year)}, false});
  }
  t.footnotes.push_back(fmt::format("Intervened diseases are assigned mortality {}.",
                                    format_fixed(schedule.frontier_mortality, 2)));
  return t;
}

std::string RenderedTable::to_text() const {
  std::size_t label_w = 0;
  for (const auto& r : body) {
    if (!r.heading) label_w = std::max(label_w, r.label.size());
  }
  std::vector<std::size_t> w(headers.size());
  for (std::size_t j = 0; j < headers.size(); ++j) w[j] = headers[j].size();
  for (const auto& r : body) {
    for (std::size_t j = 0; j < r.cells.size() && j < w.size(); ++j) {
      w[j] = std::max(w[j], r.cells[j].size());
    }
  }
  std::size_t total = label_w;
  for (auto x : w) total += 2 + x;
  for (const auto& r : body) {
    if (r.heading) total = std::max(total, r.label.size());
  }

  std::string out;
  auto line = [&](char c) { out.append(total, c).push_back('\n'); };
  auto emit = [&](const std::string& label, const std::vector<std::string>& cells) {
    std::string s = fmt::format("{:<{}}", label, label_w);
    for (std::size_t j = 0; j < w.size(); ++j) {
      s += fmt::format("  {:>{}}", j < cells.size() ? cells[j] : std::string(), w[j]);
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out += s;
    out.push_back('\n');
  };

  if (!title.empty()) out += title + "\n";
  line('=');
  emit("", headers);
  line('-');
  for (const auto& r : body) {
    if (r.heading) {
      out += r.label + "\n";
    } else {
      emit(r.label, r.cells);
    }
  }
  line('-');
  for (const auto& f : footnotes) out += f + "\n";
  return out;
}

std::string RenderedTable::to_csv() const {
  std::ostringstream out;
  if (!title.empty()) csv::write_row(out, {title});
  std::vector<std::string> head{""};
  head.insert(head.end(), headers.begin(), headers.end());
  csv::write_row(out, head);
  for (const auto& r : body) {
    std::vector<std::string> cells{r.label};
    if (!r.heading) cells.insert(cells.end(), r.cells.begin(), r.cells.end());
    csv::write_row(out, cells);
  }
  for (const auto& f : footnotes) csv::write_row(out, {f});
  return out.str();
}

std::string RenderedTable::format(OutputFormat f) const {
  return f == OutputFormat::csv ? to_csv() : to_text();
}

}  // namespace paneliv
