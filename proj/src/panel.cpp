#include "paneliv/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "paneliv/csv.hpp"
#include "paneliv/error.hpp"

namespace paneliv {

std::string_view to_string(CountryGroup group) {
  switch (group) {
    case CountryGroup::base: return "base";
    case CountryGroup::low_middle: return "low_middle";
    case CountryGroup::rich: return "rich";
    case CountryGroup::excluded: return "excluded";
  }
  return "base";
}

CountryGroup parse_country_group(std::string_view text) {
  if (text == "base") return CountryGroup::base;
  if (text == "low_middle") return CountryGroup::low_middle;
  if (text == "rich") return CountryGroup::rich;
  if (text == "excluded") return CountryGroup::excluded;
  throw DataError(fmt::format(
      "unknown country group '{}' (expected base, low_middle, rich or excluded)", text));
}

// ---------------------------------------------------------------------------
// CountryYearPanel

std::vector<std::string> CountryYearPanel::countries() const {
  std::vector<std::string> out;
  for (const auto& key : keys_) {
    if (out.empty() || out.back() != key.country) out.push_back(key.country);
  }
  return out;
}

std::size_t CountryYearPanel::n_countries() const { return countries().size(); }

bool CountryYearPanel::has_variable(std::string_view name) const {
  return columns_.find(name) != columns_.end();
}

std::vector<std::string> CountryYearPanel::variables() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& [name, _] : columns_) out.push_back(name);
  return out;
}

std::span<const double> CountryYearPanel::column(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw SpecError(fmt::format("unknown variable '{}'", name));
  return it->second;
}

std::optional<std::size_t> CountryYearPanel::find(std::string_view country, int year) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), std::pair{country, year},
                             [](const ObservationKey& k, const std::pair<std::string_view, int>& v) {
                               int c = k.country.compare(v.first);
                               if (c != 0) return c < 0;
                               return k.year < v.second;
                             });
  if (it == keys_.end() || it->country != country || it->year != year) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

double CountryYearPanel::value(std::string_view country, int year,
                               std::string_view variable) const {
  auto col = column(variable);
  auto row = find(country, year);
  return row ? col[*row] : kMissing;
}

const CountryMeta* CountryYearPanel::meta(std::string_view country) const {
  auto it = meta_.find(country);
  return it == meta_.end() ? nullptr : &it->second;
}

CountryYearPanel CountryYearPanel::with_column(std::string name, std::vector<double> values) const {
  if (name.empty()) throw SpecError("variable names must be non-empty");
  if (values.size() != keys_.size()) {
    throw DataError(fmt::format("column '{}' has {} values for {} observations", name,
                                values.size(), keys_.size()));
  }
  CountryYearPanel out = *this;
  out.columns_[std::move(name)] = std::move(values);
  return out;
}

CountryYearPanel CountryYearPanel::with_meta(
    std::map<std::string, CountryMeta, std::less<>> meta) const {
  CountryYearPanel out = *this;
  out.meta_ = std::move(meta);
  return out;
}

CountryYearPanel CountryYearPanel::select_rows(std::span<const std::size_t> rows) const {
  CountryYearPanel out;
  out.year_grid_ = year_grid_;
  out.keys_.reserve(rows.size());
  for (auto r : rows) out.keys_.push_back(keys_.at(r));
  for (const auto& [name, values] : columns_) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (auto r : rows) col.push_back(values[r]);
    out.columns_.emplace(name, std::move(col));
  }
  std::set<std::string, std::less<>> kept;
  for (const auto& k : out.keys_) kept.insert(k.country);
  for (const auto& [country, m] : meta_) {
    if (kept.count(country)) out.meta_.emplace(country, m);
  }
  return out;
}

bool CountryYearPanel::is_evenly_spaced() const {
  if (year_grid_.size() < 2) return true;
  const int step = year_grid_[1] - year_grid_[0];
  for (std::size_t i = 2; i < year_grid_.size(); ++i) {
    if (year_grid_[i] - year_grid_[i - 1] != step) return false;
  }
  return true;
}

int CountryYearPanel::grid_step() const {
  if (year_grid_.size() < 2) throw DataError("year grid has fewer than two years; step undefined");
  if (!is_evenly_spaced()) throw DataError("year grid is unevenly spaced; lag undefined");
  return year_grid_[1] - year_grid_[0];
}

// ---------------------------------------------------------------------------
// PanelBuilder

PanelBuilder::PanelBuilder(std::vector<std::string> variables) : variables_(std::move(variables)) {
  std::set<std::string> seen;
  for (const auto& v : variables_) {
    if (v.empty()) throw DataError("variable names must be non-empty");
    if (!seen.insert(v).second) throw DataError(fmt::format("duplicate variable '{}'", v));
  }
}

void PanelBuilder::add(ObservationKey key, std::vector<double> values) {
  if (values.size() != variables_.size()) {
    throw DataError(fmt::format("observation ({},{}) has {} values, expected {}", key.country,
                                key.year, values.size(), variables_.size()));
  }
  if (key.country.empty()) throw DataError("empty country id");
  auto label = fmt::format("({},{})", key.country, key.year);
  if (!rows_.emplace(std::move(key), std::move(values)).second) {
    throw DataError(fmt::format("duplicate observation {}", label));
  }
}

void PanelBuilder::set_meta(std::string country, CountryMeta meta) {
  meta_[std::move(country)] = std::move(meta);
}

CountryYearPanel PanelBuilder::build(std::optional<std::vector<int>> year_grid) && {
  CountryYearPanel panel;
  std::set<int> years;
  panel.keys_.reserve(rows_.size());
  for (const auto& [key, _] : rows_) {
    panel.keys_.push_back(key);
    years.insert(key.year);
  }
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    std::vector<double> col;
    col.reserve(rows_.size());
    for (const auto& [_, values] : rows_) col.push_back(values[j]);
    panel.columns_.emplace(variables_[j], std::move(col));
  }
  if (year_grid) {
    std::sort(year_grid->begin(), year_grid->end());
    year_grid->erase(std::unique(year_grid->begin(), year_grid->end()), year_grid->end());
    for (int y : years) {
      if (!std::binary_search(year_grid->begin(), year_grid->end(), y)) {
        throw DataError(fmt::format("observed year {} is not in the year grid", y));
      }
    }
    panel.year_grid_ = std::move(*year_grid);
  } else {
    panel.year_grid_.assign(years.begin(), years.end());
  }
  panel.meta_ = std::move(meta_);
  return panel;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

bool looks_like_year(std::string_view s) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && res.ec == std::errc{} && res.ptr == s.data() + s.size() && v >= 1000 &&
         v <= 3000;
}

}  // namespace

CountryYearPanel ingest_country_year_csv(std::istream& in, const CsvSchema& schema,
                                         std::string_view source) {
  auto table = csv::read(in, source);
  const auto country_col = table.column_index(schema.country_column, source);
  const auto year_col = table.column_index(schema.year_column, source);

  std::vector<std::size_t> var_cols;
  std::vector<std::string> var_names;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == country_col || j == year_col) continue;
    const auto& name = table.header[j];
    if (name.empty()) throw DataError(fmt::format("{}: empty column name at position {}", source, j + 1));
    if (looks_like_year(name)) {
      throw DataError(fmt::format(
          "{}: column '{}' looks like a year; wide layouts are not accepted, supply one row per "
          "country-year",
          source, name));
    }
    var_cols.push_back(j);
    var_names.push_back(name);
  }

  PanelBuilder builder(var_names);
  for (const auto& row : table.rows) {
    const auto& country = row.cells[country_col];
    auto where = fmt::format("{}:{}", source, row.line);
    if (country.empty()) throw DataError(fmt::format("{}: empty country id", where));
    int year = csv::parse_int(row.cells[year_col], fmt::format("{} column '{}'", where, schema.year_column));
    std::vector<double> values;
    values.reserve(var_cols.size());
    for (std::size_t k = 0; k < var_cols.size(); ++k) {
      values.push_back(csv::parse_real(row.cells[var_cols[k]],
                                       fmt::format("{} column '{}'", where, var_names[k])));
    }
    try {
      builder.add({country, year, 0}, std::move(values));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: {}", where, e.what()));
    }
  }
  return std::move(builder).build();
}

CountryYearPanel ingest_country_year_csv(const std::filesystem::path& path,
                                         const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return ingest_country_year_csv(in, schema, path.string());
}

CountryYearPanel attach_country_groups(const CountryYearPanel& panel, std::istream& in,
                                       std::string_view source) {
  auto table = csv::read(in, source);
  const auto country_col = table.column_index("country", source);
  const auto group_col = table.column_index("group", source);
  const bool has_name = table.has_column("name");
  const auto name_col = has_name ? table.column_index("name", source) : 0;

  std::map<std::string, CountryMeta, std::less<>> meta;
  for (const auto& row : table.rows) {
    CountryMeta m;
    try {
      m.group = parse_country_group(row.cells[group_col]);
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", source, row.line, e.what()));
    }
    m.name = has_name ? row.cells[name_col] : row.cells[country_col];
    if (!meta.emplace(row.cells[country_col], std::move(m)).second) {
      throw DataError(fmt::format("{}:{}: duplicate country '{}'", source, row.line,
                                  row.cells[country_col]));
    }
  }
  return panel.with_meta(std::move(meta));
}

CountryYearPanel attach_country_groups(const CountryYearPanel& panel,
                                       const std::filesystem::path& groups_csv) {
  std::ifstream in(groups_csv);
  if (!in) throw DataError(fmt::format("cannot open '{}'", groups_csv.string()));
  return attach_country_groups(panel, in, groups_csv.string());
}

void write_country_year_csv(const CountryYearPanel& panel, std::ostream& out) {
  auto vars = panel.variables();
  std::vector<std::string> header{"country", "year"};
  header.insert(header.end(), vars.begin(), vars.end());
  csv::write_row(out, header);
  std::vector<std::span<const double>> cols;
  for (const auto& v : vars) cols.push_back(panel.column(v));
  const auto keys = panel.keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::vector<std::string> cells{keys[i].country, std::to_string(keys[i].year)};
    for (const auto& c : cols) cells.push_back(csv::format_real(c[i]));
    csv::write_row(out, cells);
  }
}

void write_country_groups_csv(const CountryYearPanel& panel, std::ostream& out) {
  csv::write_row(out, {"country", "group", "name"});
  for (const auto& [country, m] : panel.country_meta()) {
    csv::write_row(out, {country, std::string(to_string(m.group)), m.name});
  }
}

// ---------------------------------------------------------------------------
// Sample filters

void SampleFilter::validate() const {
  if (mode == Mode::explicit_list && countries.empty()) {
    throw SpecError("explicit_list sample requires a non-empty country list");
  }
  if (mode != Mode::explicit_list && !countries.empty()) {
    throw SpecError("a country list is only valid with the explicit_list sample");
  }
}

std::string SampleFilter::describe() const {
  switch (mode) {
    case Mode::all: return "all countries";
    case Mode::base_sample: return "base sample";
    case Mode::low_middle_income: return "low- and middle-income countries";
    case Mode::explicit_list: return fmt::format("countries {}", fmt::join(countries, ", "));
  }
  return {};
}

CountryYearPanel filter_sample(const CountryYearPanel& panel, const SampleFilter& filter) {
  filter.validate();
  using Mode = SampleFilter::Mode;
  if (filter.mode == Mode::all) {
    if (panel.empty()) throw DataError("sample selects zero countries");
    return panel;
  }

  std::set<std::string, std::less<>> wanted(filter.countries.begin(), filter.countries.end());
  const auto countries = panel.countries();
  if (filter.mode != Mode::explicit_list) {
    std::vector<std::string> untagged;
    for (const auto& c : countries) {
      if (!panel.meta(c)) untagged.push_back(c);
    }
    if (!untagged.empty()) {
      throw SpecError(fmt::format("sample '{}' needs country groups; untagged: {}",
                                  filter.describe(), fmt::join(untagged, ", ")));
    }
  }
  auto keep = [&](const std::string& country) {
    switch (filter.mode) {
      case Mode::base_sample: return panel.meta(country)->group != CountryGroup::excluded;
      case Mode::low_middle_income: return panel.meta(country)->group == CountryGroup::low_middle;
      case Mode::explicit_list: return wanted.count(country) > 0;
      case Mode::all: return true;
    }
    return false;
  };

  std::vector<std::size_t> rows;
  const auto keys = panel.keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keep(keys[i].country)) rows.push_back(i);
  }
  if (rows.empty()) {
    throw DataError(fmt::format("sample '{}' selects zero countries", filter.describe()));
  }
  return panel.select_rows(rows);
}

// ---------------------------------------------------------------------------
// Transforms

namespace {

void require_grid_year(const CountryYearPanel& panel, int year) {
  const auto& grid = panel.year_grid();
  if (!std::binary_search(grid.begin(), grid.end(), year)) {
    throw SpecError(fmt::format("year {} is outside the panel's year grid", year));
  }
}

template <typename Combine>
CrossSection two_year_transform(const CountryYearPanel& panel, std::string_view variable, int a,
                                int b, Combine combine) {
  (void)panel.column(variable);
  require_grid_year(panel, a);
  require_grid_year(panel, b);
  CrossSection out;
  for (const auto& country : panel.countries()) {
    const double va = panel.value(country, a, variable);
    const double vb = panel.value(country, b, variable);
    if (is_missing(va) || is_missing(vb)) {
      out.omitted.push_back(country);
      continue;
    }
    combine(out, country, va, vb);
  }
  return out;
}

}  // namespace

CrossSection long_difference(const CountryYearPanel& panel, std::string_view variable,
                             int start_year, int end_year) {
  return two_year_transform(panel, variable, start_year, end_year,
                            [](CrossSection& out, const std::string& c, double va, double vb) {
                              out.values.emplace(c, vb - va);
                            });
}

CrossSection growth_rate(const CountryYearPanel& panel, std::string_view variable, int from_year,
                         int to_year) {
  return two_year_transform(
      panel, variable, from_year, to_year,
      [from_year](CrossSection& out, const std::string& c, double va, double vb) {
        if (va == 0.0) {
          out.errors.emplace(c, fmt::format("zero denominator in {}", from_year));
          return;
        }
        if (va < 0.0) out.flagged.push_back(c);
        out.values.emplace(c, (vb - va) / va);
      });
}

std::string lag_name(std::string_view variable, int periods) {
  return fmt::format("{}_lag{}", variable, periods);
}

CountryYearPanel lag_variable(const CountryYearPanel& panel, std::string_view variable,
                              int periods) {
  if (periods < 1) throw SpecError(fmt::format("lag periods must be >= 1, got {}", periods));
  const auto col = panel.column(variable);
  const int step = panel.grid_step();
  const auto keys = panel.keys();
  std::vector<double> lagged(keys.size(), kMissing);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (auto src = panel.find(keys[i].country, keys[i].year - periods * step)) {
      lagged[i] = col[*src];
    }
  }
  return panel.with_column(lag_name(variable, periods), std::move(lagged));
}

std::string interaction_name(std::string_view base, int year) {
  return fmt::format("{}_x_{}", base, year);
}

Interactions interact_with_year_dummies(const CountryYearPanel& panel,
                                        std::string_view base_variable) {
  const auto base = panel.column(base_variable);
  std::vector<double> base_copy(base.begin(), base.end());
  const auto keys = panel.keys();
  Interactions out{panel, {}};
  const auto& grid = panel.year_grid();
  for (std::size_t g = 1; g < grid.size(); ++g) {
    std::vector<double> col(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      col[i] = keys[i].year == grid[g] ? base_copy[i] : (is_missing(base_copy[i]) ? kMissing : 0.0);
    }
    auto name = interaction_name(base_variable, grid[g]);
    out.panel = out.panel.with_column(name, std::move(col));
    out.names.push_back(std::move(name));
  }
  return out;
}

CountryYearPanel restrict_years(const CountryYearPanel& panel, std::vector<int> years) {
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  std::vector<std::size_t> rows;
  const auto keys = panel.keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (std::binary_search(years.begin(), years.end(), keys[i].year)) rows.push_back(i);
  }
  auto vars = panel.variables();
  PanelBuilder builder(vars);
  std::vector<std::span<const double>> cols;
  for (const auto& v : vars) cols.push_back(panel.column(v));
  for (auto r : rows) {
    std::vector<double> values;
    for (const auto& c : cols) values.push_back(c[r]);
    builder.add(keys[r], std::move(values));
  }
  for (const auto& [country, m] : panel.country_meta()) builder.set_meta(country, m);
  return std::move(builder).build(std::move(years));
}

CountryYearPanel expand_frequency_weights(const CountryYearPanel& panel,
                                          std::string_view weight_variable) {
  const auto weights = panel.column(weight_variable);
  auto vars = panel.variables();
  std::vector<std::span<const double>> cols;
  for (const auto& v : vars) cols.push_back(panel.column(v));
  PanelBuilder builder(vars);
  const auto keys = panel.keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double w = weights[i];
    if (is_missing(w)) continue;
    if (w <= 0.0) {
      throw DataError(fmt::format("nonpositive weight {} at ({},{})", w, keys[i].country,
                                  keys[i].year));
    }
    const auto copies = static_cast<long long>(std::llround(w));
    std::vector<double> values;
    for (const auto& c : cols) values.push_back(c[i]);
    for (long long r = 0; r < copies; ++r) {
      builder.add({keys[i].country, keys[i].year, static_cast<int>(r)}, values);
    }
  }
  for (const auto& [country, m] : panel.country_meta()) builder.set_meta(country, m);
  return std::move(builder).build(panel.year_grid());
}

}  // namespace paneliv
