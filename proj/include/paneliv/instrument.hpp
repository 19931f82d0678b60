#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paneliv/panel.hpp"

namespace paneliv {

// Disease-specific mortality, deaths per 100 population per year, keyed by
// (country, disease, year).
class DiseaseMortalityPanel {
 public:
  struct Record {
    std::string country;
    std::string disease;
    int year = 0;
    double mortality = 0.0;
  };

  DiseaseMortalityPanel() = default;
  // Validates uniqueness and nonnegativity. When `declared_diseases` is
  // non-empty every record must use one of them.
  static DiseaseMortalityPanel from_records(std::vector<Record> records,
                                            std::vector<std::string> declared_diseases = {});

  const std::vector<Record>& records() const noexcept { return records_; }
  const std::vector<std::string>& diseases() const noexcept { return diseases_; }
  std::vector<std::string> countries() const;
  std::vector<int> years() const;
  std::optional<double> mortality(std::string_view country, std::string_view disease,
                                  int year) const;

 private:
  std::vector<Record> records_;  // sorted by (country, disease, year)
  std::vector<std::string> diseases_;
};

DiseaseMortalityPanel read_disease_mortality_csv(const std::filesystem::path& path);
DiseaseMortalityPanel read_disease_mortality_csv(std::istream& in,
                                                 std::string_view source = "<stream>");
void write_disease_mortality_csv(const DiseaseMortalityPanel& panel, std::ostream& out);

struct InterventionSchedule {
  std::map<std::string, int, std::less<>> intervention_year;
  // Mortality a disease is assigned once intervened (the "frontier").
  double frontier_mortality = 0.0;

  // The 14-disease antibiotic/vaccination schedule shipped with the library.
  static InterventionSchedule default_schedule();

  int year_of(std::string_view disease) const;
  void validate() const;
  // Throws SpecError listing diseases in `mortality` without an entry.
  void check_covers(const DiseaseMortalityPanel& mortality) const;
};

InterventionSchedule read_intervention_schedule_csv(const std::filesystem::path& path);
InterventionSchedule read_intervention_schedule_csv(std::istream& in,
                                                    std::string_view source = "<stream>");

// 1 strictly after the disease's intervention year, 0 up to and including it.
int intervention_indicator(const InterventionSchedule& schedule, std::string_view disease,
                           int year);

struct CountryCoverage {
  // (disease, year) cells with no record, counted as zero mortality.
  std::size_t missing_cells = 0;
  std::size_t expected_cells = 0;
};

struct PredictedMortalitySeries {
  std::map<std::pair<std::string, int>, double> values;
  std::map<std::string, CountryCoverage> coverage;

  std::optional<double> at(std::string_view country, int year) const;
  std::vector<int> years() const;
};

// Sum over diseases of actual mortality while not yet intervened and the
// frontier value afterwards. A (country, year) pair is produced when the
// country has at least one record that year, or when every disease is
// already intervened (the value then no longer depends on data). Missing
// disease cells contribute zero and are counted in `coverage`.
PredictedMortalitySeries predicted_mortality(const DiseaseMortalityPanel& mortality,
                                             const InterventionSchedule& schedule,
                                             std::vector<int> extra_years = {});

// M(to) - M(from) for countries with both years; throws when either year is
// absent from the whole series.
CrossSection predicted_mortality_change(const PredictedMortalitySeries& series, int from_year,
                                        int to_year);

void write_predicted_mortality_csv(const PredictedMortalitySeries& series, std::ostream& out);

// Joins the series onto `panel` as column `name`; rows without a value get NaN.
CountryYearPanel merge_instrument(const CountryYearPanel& panel,
                                  const PredictedMortalitySeries& series,
                                  std::string name = "pred_mort");

struct SummaryRow {
  std::string label;  // year, or "Total"
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1) standard deviation
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;  // n == 1, sd reported as 0
};

// One row per year plus a pooled Total row.
std::vector<SummaryRow> instrument_summary(const PredictedMortalitySeries& series);

// Country-disease-year rows for the regression of disease mortality on the
// intervention dummy and its lags.
struct ZerothStageRow {
  std::string country;
  std::string disease;
  int year = 0;
  double mortality = 0.0;
  int intervention = 0;
  std::vector<int> lagged_intervention;  // lags 1..L
};

struct ZerothStageData {
  std::vector<ZerothStageRow> rows;
  int lags = 0;

  // Unit id of a country-disease pair; it plays the country role in the
  // returned panel so pair effects and pair clustering reuse the country
  // machinery. Columns: mortality, intervention, intervention_lag<k>.
  static std::string pair_id(std::string_view country, std::string_view disease);
  CountryYearPanel to_panel(
      const std::map<std::string, CountryMeta, std::less<>>& country_meta = {}) const;
};

ZerothStageData zeroth_stage_dataset(const DiseaseMortalityPanel& mortality,
                                     const InterventionSchedule& schedule, int lags);

}  // namespace paneliv
