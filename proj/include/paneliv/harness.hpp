#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paneliv/config.hpp"
#include "paneliv/diagnostics.hpp"
#include "paneliv/instrument.hpp"
#include "paneliv/regress.hpp"
#include "paneliv/render.hpp"

namespace paneliv {

struct DataPaths {
  std::filesystem::path country_year;
  std::filesystem::path groups;
  std::filesystem::path disease_mortality;
  std::filesystem::path interventions;
};

struct NamedSpec {
  enum class Estimator { ols, tsls, first_stage };
  enum class Dataset { country_year, zeroth_stage };

  std::string name;
  std::size_t line = 0;
  Estimator estimator = Estimator::ols;
  Dataset dataset = Dataset::country_year;
  int zeroth_stage_lags = 0;
  RegressionSpec spec;
  bool weak_iv = false;
  std::string label;
  std::string panel;
};

struct RunConfig {
  enum class Kind { regressions, instrument_summary, schedule };

  std::string source;
  DataPaths data;
  // Presets look for the data files but treat absent ones as not supplied.
  bool optional_files = false;
  std::vector<NamedSpec> specs;
  Kind kind = Kind::regressions;
  TableLayout layout;
  // Country sample of the instrument summary.
  SampleFilter summary_sample;
  OutputFormat format = OutputFormat::text;
  std::string output_path;
  std::uint64_t seed = 0;
};

// Sections [data], [output], [run], [layout] and [dgp] are reserved; every
// other section is one regression spec, kept in declaration order.
RunConfig parse_run_config(const config::Document& doc);
RunConfig load_run_config(const std::filesystem::path& path);

struct LoadedData {
  std::optional<CountryYearPanel> country_year;  // with pred_mort when mortality is given
  std::optional<DiseaseMortalityPanel> mortality;
  InterventionSchedule schedule;
  std::optional<PredictedMortalitySeries> instrument;
  std::vector<std::string> notes;
};

LoadedData load_data(const RunConfig& config);

struct SpecOutcome {
  std::string name;
  NamedSpec spec;
  std::optional<FitResult> fit;
  std::optional<WeakIvReport> weak_iv;
  std::string error;

  bool ok() const noexcept { return error.empty(); }
};

// Runs every spec in declaration order. A failing spec records its error and
// the batch continues.
std::vector<SpecOutcome> run_specs(const RunConfig& config, const LoadedData& data);
std::vector<SpecOutcome> run_config(const std::filesystem::path& path);

struct Report {
  RenderedTable table;
  std::vector<SpecOutcome> outcomes;
  std::vector<std::string> notes;

  bool ok() const;
};

Report build_report(const RunConfig& config, const LoadedData& data);

// Preset ids T1..T16.
std::vector<std::string> preset_ids();
std::string_view preset_text(std::string_view table_id);
// Runs a preset against `data_dir`, which holds country_year.csv, groups.csv,
// disease_mortality.csv and interventions.csv (the last three as needed).
// Throws DataError listing what the table needs when inputs are missing.
Report replicate_preset(std::string_view table_id, const std::filesystem::path& data_dir);

}  // namespace paneliv
