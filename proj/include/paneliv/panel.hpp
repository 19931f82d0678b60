#pragma once

#include <cmath>
#include <compare>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace paneliv {

// Missing cells are stored as quiet NaN throughout the panel layer.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

enum class CountryGroup { base, low_middle, rich, excluded };

std::string_view to_string(CountryGroup group);
CountryGroup parse_country_group(std::string_view text);

struct CountryMeta {
  CountryGroup group = CountryGroup::base;
  std::string name;
};

// (country, year) identifies an observation. `replica` is only nonzero in
// panels produced by expand_frequency_weights, where one observation is
// repeated round(w) times.
struct ObservationKey {
  std::string country;
  int year = 0;
  int replica = 0;

  auto operator<=>(const ObservationKey&) const = default;
};

// Long-format country x year panel. Immutable once built: every operation
// returns a new panel. Rows are kept sorted by key.
class CountryYearPanel {
 public:
  CountryYearPanel() = default;

  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  std::span<const ObservationKey> keys() const noexcept { return keys_; }
  const std::vector<int>& year_grid() const noexcept { return year_grid_; }

  // Sorted distinct country ids present in the observations.
  std::vector<std::string> countries() const;
  std::size_t n_countries() const;

  bool has_variable(std::string_view name) const;
  std::vector<std::string> variables() const;
  // Throws SpecError("unknown variable ...") when absent.
  std::span<const double> column(std::string_view name) const;

  std::optional<std::size_t> find(std::string_view country, int year) const;
  // NaN when the observation or the cell is missing.
  double value(std::string_view country, int year, std::string_view variable) const;

  const std::map<std::string, CountryMeta, std::less<>>& country_meta() const noexcept {
    return meta_;
  }
  const CountryMeta* meta(std::string_view country) const;

  // Returns a copy with `name` added (or replaced). `values` is row-aligned.
  CountryYearPanel with_column(std::string name, std::vector<double> values) const;
  CountryYearPanel with_meta(std::map<std::string, CountryMeta, std::less<>> meta) const;
  // Keeps the listed rows (indices into keys()); year_grid is preserved.
  CountryYearPanel select_rows(std::span<const std::size_t> rows) const;

  bool is_evenly_spaced() const;
  // Grid spacing; throws DataError when the grid is uneven or has < 2 years.
  int grid_step() const;

 private:
  friend class PanelBuilder;

  std::vector<ObservationKey> keys_;
  std::map<std::string, std::vector<double>, std::less<>> columns_;
  std::vector<int> year_grid_;
  std::map<std::string, CountryMeta, std::less<>> meta_;
};

class PanelBuilder {
 public:
  explicit PanelBuilder(std::vector<std::string> variables);

  // Throws DataError naming the pair on a duplicate key.
  void add(ObservationKey key, std::vector<double> values);
  void set_meta(std::string country, CountryMeta meta);

  // The grid defaults to the distinct observed years. An explicit grid must
  // contain every observed year.
  CountryYearPanel build(std::optional<std::vector<int>> year_grid = std::nullopt) &&;

 private:
  std::vector<std::string> variables_;
  std::map<ObservationKey, std::vector<double>> rows_;
  std::map<std::string, CountryMeta, std::less<>> meta_;
};

// Maps CSV column names to the two key roles.
struct CsvSchema {
  std::string country_column = "country";
  std::string year_column = "year";
};

CountryYearPanel ingest_country_year_csv(const std::filesystem::path& path,
                                         const CsvSchema& schema = {});
CountryYearPanel ingest_country_year_csv(std::istream& in, const CsvSchema& schema = {},
                                         std::string_view source = "<stream>");

// Attaches group tags from a `country,group[,name]` CSV.
CountryYearPanel attach_country_groups(const CountryYearPanel& panel,
                                       const std::filesystem::path& groups_csv);
CountryYearPanel attach_country_groups(const CountryYearPanel& panel, std::istream& in,
                                       std::string_view source = "<stream>");

// Writes `country,year,<variables...>` in row order.
void write_country_year_csv(const CountryYearPanel& panel, std::ostream& out);
void write_country_groups_csv(const CountryYearPanel& panel, std::ostream& out);

struct SampleFilter {
  enum class Mode { all, base_sample, low_middle_income, explicit_list };
  Mode mode = Mode::all;
  std::vector<std::string> countries;

  static SampleFilter all() { return {}; }
  static SampleFilter base_sample() { return {Mode::base_sample, {}}; }
  static SampleFilter low_middle_income() { return {Mode::low_middle_income, {}}; }
  static SampleFilter explicit_list(std::vector<std::string> ids) {
    return {Mode::explicit_list, std::move(ids)};
  }

  void validate() const;
  std::string describe() const;
};

// base_sample keeps every country not tagged `excluded`; low_middle_income
// keeps the `low_middle` tag only.
CountryYearPanel filter_sample(const CountryYearPanel& panel, const SampleFilter& filter);

// Country-level result of a two-year transform. Countries without a value
// are listed in `omitted` (missing inputs) or `errors` (degenerate inputs).
struct CrossSection {
  std::map<std::string, double> values;
  std::vector<std::string> omitted;
  std::map<std::string, std::string> errors;
  // Countries kept but worth a second look (negative growth denominators).
  std::vector<std::string> flagged;
};

CrossSection long_difference(const CountryYearPanel& panel, std::string_view variable,
                             int start_year, int end_year);

// (value(to) - value(from)) / value(from).
CrossSection growth_rate(const CountryYearPanel& panel, std::string_view variable, int from_year,
                         int to_year);

std::string lag_name(std::string_view variable, int periods);
// Adds `<variable>_lag<K>`: the value K grid steps earlier, missing when that
// year is absent.
CountryYearPanel lag_variable(const CountryYearPanel& panel, std::string_view variable,
                              int periods);

std::string interaction_name(std::string_view base, int year);
struct Interactions {
  CountryYearPanel panel;
  std::vector<std::string> names;
};
// Adds base x 1[t = y] for every grid year but the earliest.
Interactions interact_with_year_dummies(const CountryYearPanel& panel,
                                        std::string_view base_variable);

// Keeps observations whose year is listed; the grid becomes `years`.
CountryYearPanel restrict_years(const CountryYearPanel& panel, std::vector<int> years);

// Test oracle for frequency weighting: observation i appears round(w_i)
// times (distinguished by ObservationKey::replica). Rows with a missing
// weight are dropped.
CountryYearPanel expand_frequency_weights(const CountryYearPanel& panel,
                                          std::string_view weight_variable);

}  // namespace paneliv
