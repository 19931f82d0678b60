#include "paneliv/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "paneliv/csv.hpp"
#include "paneliv/error.hpp"
#include "paneliv/resources.hpp"

namespace paneliv {
namespace {

auto record_key(const DiseaseMortalityPanel::Record& r) {
  return std::tie(r.country, r.disease, r.year);
}

}  // namespace

// ---------------------------------------------------------------------------
// DiseaseMortalityPanel

DiseaseMortalityPanel DiseaseMortalityPanel::from_records(std::vector<Record> records,
                                                          std::vector<std::string> declared) {
  std::sort(records.begin(), records.end(),
            [](const Record& a, const Record& b) { return record_key(a) < record_key(b); });
  std::set<std::string> declared_set(declared.begin(), declared.end());
  std::set<std::string> seen_diseases;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && record_key(records[i - 1]) == record_key(r)) {
      throw DataError(fmt::format("duplicate mortality record ({},{},{})", r.country, r.disease,
                                  r.year));
    }
    if (!(r.mortality >= 0.0)) {
      throw DataError(fmt::format("mortality must be >= 0 at ({},{},{}), got {}", r.country,
                                  r.disease, r.year, r.mortality));
    }
    if (!declared_set.empty() && !declared_set.count(r.disease)) {
      throw DataError(fmt::format("disease '{}' is not in the declared disease list", r.disease));
    }
    seen_diseases.insert(r.disease);
  }
  DiseaseMortalityPanel out;
  out.records_ = std::move(records);
  if (declared.empty()) {
    out.diseases_.assign(seen_diseases.begin(), seen_diseases.end());
  } else {
    out.diseases_ = std::move(declared);
  }
  return out;
}

std::vector<std::string> DiseaseMortalityPanel::countries() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (out.empty() || out.back() != r.country) out.push_back(r.country);
  }
  return out;
}

std::vector<int> DiseaseMortalityPanel::years() const {
  std::set<int> ys;
  for (const auto& r : records_) ys.insert(r.year);
  return {ys.begin(), ys.end()};
}

std::optional<double> DiseaseMortalityPanel::mortality(std::string_view country,
                                                       std::string_view disease, int year) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), 0,
                             [&](const Record& r, int) {
                               if (int c = r.country.compare(country); c != 0) return c < 0;
                               if (int c = r.disease.compare(disease); c != 0) return c < 0;
                               return r.year < year;
                             });
  if (it == records_.end() || it->country != country || it->disease != disease || it->year != year) {
    return std::nullopt;
  }
  return it->mortality;
}

DiseaseMortalityPanel read_disease_mortality_csv(std::istream& in, std::string_view source) {
  auto table = csv::read(in, source);
  const auto c = table.column_index("country", source);
  const auto d = table.column_index("disease", source);
  const auto y = table.column_index("year", source);
  const auto m = table.column_index("mortality", source);
  std::vector<DiseaseMortalityPanel::Record> records;
  for (const auto& row : table.rows) {
    auto where = fmt::format("{}:{}", source, row.line);
    double value = csv::parse_real(row.cells[m], where + " column 'mortality'");
    if (is_missing(value)) continue;  // an empty cell is a missing record
    records.push_back({row.cells[c], row.cells[d], csv::parse_int(row.cells[y], where + " column 'year'"),
                       value});
  }
  return DiseaseMortalityPanel::from_records(std::move(records));
}

DiseaseMortalityPanel read_disease_mortality_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_disease_mortality_csv(in, path.string());
}

void write_disease_mortality_csv(const DiseaseMortalityPanel& panel, std::ostream& out) {
  csv::write_row(out, {"country", "disease", "year", "mortality"});
  for (const auto& r : panel.records()) {
    csv::write_row(out, {r.country, r.disease, std::to_string(r.year), csv::format_real(r.mortality)});
  }
}

// ---------------------------------------------------------------------------
// InterventionSchedule

InterventionSchedule InterventionSchedule::default_schedule() {
  std::istringstream in{std::string(resources::get("interventions_table11.csv"))};
  return read_intervention_schedule_csv(in, "interventions_table11.csv");
}

int InterventionSchedule::year_of(std::string_view disease) const {
  auto it = intervention_year.find(disease);
  if (it == intervention_year.end()) {
    throw SpecError(fmt::format("disease '{}' has no intervention date", disease));
  }
  return it->second;
}

void InterventionSchedule::validate() const {
  if (!(frontier_mortality >= 0.0)) {
    throw SpecError(fmt::format("frontier mortality must be >= 0, got {}", frontier_mortality));
  }
}

void InterventionSchedule::check_covers(const DiseaseMortalityPanel& mortality) const {
  std::vector<std::string> missing;
  for (const auto& d : mortality.diseases()) {
    if (!intervention_year.count(d)) missing.push_back(d);
  }
  if (!missing.empty()) {
    throw SpecError(fmt::format("no intervention date for disease(s): {}", fmt::join(missing, ", ")));
  }
}

InterventionSchedule read_intervention_schedule_csv(std::istream& in, std::string_view source) {
  auto table = csv::read(in, source);
  const auto d = table.column_index("disease", source);
  const auto y = table.column_index("intervention_year", source);
  InterventionSchedule s;
  for (const auto& row : table.rows) {
    auto where = fmt::format("{}:{}", source, row.line);
    int year = csv::parse_int(row.cells[y], where + " column 'intervention_year'");
    if (!s.intervention_year.emplace(row.cells[d], year).second) {
      throw DataError(fmt::format("{}: duplicate disease '{}'", where, row.cells[d]));
    }
  }
  return s;
}

InterventionSchedule read_intervention_schedule_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_intervention_schedule_csv(in, path.string());
}

int intervention_indicator(const InterventionSchedule& schedule, std::string_view disease,
                           int year) {
  return year > schedule.year_of(disease) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Predicted mortality

std::optional<double> PredictedMortalitySeries::at(std::string_view country, int year) const {
  auto it = values.find({std::string(country), year});
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::vector<int> PredictedMortalitySeries::years() const {
  std::set<int> ys;
  for (const auto& [key, _] : values) ys.insert(key.second);
  return {ys.begin(), ys.end()};
}

PredictedMortalitySeries predicted_mortality(const DiseaseMortalityPanel& mortality,
                                             const InterventionSchedule& schedule,
                                             std::vector<int> extra_years) {
  schedule.validate();
  schedule.check_covers(mortality);

  std::set<int> years(extra_years.begin(), extra_years.end());
  for (int y : mortality.years()) years.insert(y);
  std::set<std::pair<std::string, int>> observed;
  for (const auto& r : mortality.records()) observed.emplace(r.country, r.year);

  PredictedMortalitySeries out;
  for (const auto& country : mortality.countries()) {
    auto& cov = out.coverage[country];
    for (int year : years) {
      bool all_intervened = true;
      for (const auto& [disease, _] : schedule.intervention_year) {
        if (!intervention_indicator(schedule, disease, year)) all_intervened = false;
      }
      if (!all_intervened && !observed.count({country, year})) continue;

      double total = 0.0;
      for (const auto& [disease, _] : schedule.intervention_year) {
        if (intervention_indicator(schedule, disease, year)) {
          total += schedule.frontier_mortality;
          continue;
        }
        ++cov.expected_cells;
        if (auto m = mortality.mortality(country, disease, year)) {
          total += *m;
        } else {
          ++cov.missing_cells;
        }
      }
      out.values[{country, year}] = total;
    }
  }
  return out;
}

CrossSection predicted_mortality_change(const PredictedMortalitySeries& series, int from_year,
                                        int to_year) {
  const auto years = series.years();
  for (int y : {from_year, to_year}) {
    if (!std::binary_search(years.begin(), years.end(), y)) {
      throw SpecError(fmt::format("predicted mortality has no values for {}", y));
    }
  }
  std::set<std::string> countries;
  for (const auto& [key, _] : series.values) countries.insert(key.first);
  CrossSection out;
  for (const auto& c : countries) {
    auto a = series.at(c, from_year);
    auto b = series.at(c, to_year);
    if (!a || !b) {
      out.omitted.push_back(c);
      continue;
    }
    out.values.emplace(c, *b - *a);
  }
  return out;
}

void write_predicted_mortality_csv(const PredictedMortalitySeries& series, std::ostream& out) {
  csv::write_row(out, {"country", "year", "predicted_mortality"});
  for (const auto& [key, v] : series.values) {
    csv::write_row(out, {key.first, std::to_string(key.second), csv::format_real(v)});
  }
}

CountryYearPanel merge_instrument(const CountryYearPanel& panel,
                                  const PredictedMortalitySeries& series, std::string name) {
  const auto keys = panel.keys();
  std::vector<double> col(keys.size(), kMissing);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (auto v = series.at(keys[i].country, keys[i].year)) col[i] = *v;
  }
  return panel.with_column(std::move(name), std::move(col));
}

std::vector<SummaryRow> instrument_summary(const PredictedMortalitySeries& series) {
  if (series.values.empty()) throw DataError("predicted mortality series is empty");
  std::map<int, std::vector<double>> by_year;
  std::vector<double> pooled;
  for (const auto& [key, v] : series.values) {
    by_year[key.second].push_back(v);
    pooled.push_back(v);
  }
  auto summarize = [](std::string label, const std::vector<double>& xs) {
    SummaryRow row;
    row.label = std::move(label);
    row.count = xs.size();
    row.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    row.min = *lo;
    row.max = *hi;
    if (xs.size() < 2) {
      row.degenerate = true;
      row.sd = 0.0;
    } else {
      double ss = 0.0;
      for (double x : xs) ss += (x - row.mean) * (x - row.mean);
      row.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return row;
  };
  std::vector<SummaryRow> rows;
  for (const auto& [year, xs] : by_year) rows.push_back(summarize(std::to_string(year), xs));
  rows.push_back(summarize("Total", pooled));
  return rows;
}

// ---------------------------------------------------------------------------
// Zeroth stage

std::string ZerothStageData::pair_id(std::string_view country, std::string_view disease) {
  return fmt::format("{}:{}", country, disease);
}

ZerothStageData zeroth_stage_dataset(const DiseaseMortalityPanel& mortality,
                                     const InterventionSchedule& schedule, int lags) {
  if (lags < 0) throw SpecError(fmt::format("lags must be >= 0, got {}", lags));
  schedule.check_covers(mortality);
  int step = 0;
  if (lags > 0) {
    const auto years = mortality.years();
    if (years.size() < 2) throw DataError("lagged interventions need at least two years");
    step = years[1] - years[0];
    for (std::size_t i = 2; i < years.size(); ++i) {
      if (years[i] - years[i - 1] != step) {
        throw DataError("mortality years are unevenly spaced; lagged interventions undefined");
      }
    }
  }
  ZerothStageData out;
  out.lags = lags;
  out.rows.reserve(mortality.records().size());
  for (const auto& r : mortality.records()) {
    ZerothStageRow row{r.country, r.disease, r.year, r.mortality,
                       intervention_indicator(schedule, r.disease, r.year), {}};
    for (int k = 1; k <= lags; ++k) {
      row.lagged_intervention.push_back(intervention_indicator(schedule, r.disease, r.year - k * step));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

CountryYearPanel ZerothStageData::to_panel(
    const std::map<std::string, CountryMeta, std::less<>>& country_meta) const {
  std::vector<std::string> vars{"mortality", "intervention"};
  for (int k = 1; k <= lags; ++k) vars.push_back(lag_name("intervention", k));
  PanelBuilder builder(vars);
  for (const auto& row : rows) {
    std::vector<double> values{row.mortality, static_cast<double>(row.intervention)};
    for (int l : row.lagged_intervention) values.push_back(l);
    auto id = pair_id(row.country, row.disease);
    builder.add({id, row.year, 0}, std::move(values));
    CountryMeta m;
    if (auto it = country_meta.find(row.country); it != country_meta.end()) m.group = it->second.group;
    m.name = fmt::format("{} / {}", row.country, row.disease);
    builder.set_meta(std::move(id), std::move(m));
  }
  return std::move(builder).build();
}

}  // namespace paneliv
