// paneliv: instrument construction, config-driven estimation, table presets
// and the exclusion-violation Monte Carlo.
//
// Exit status: 0 when everything succeeded, 1 when a spec or estimation
// failed, 2 on usage, configuration or input errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "paneliv/config.hpp"
#include "paneliv/error.hpp"
#include "paneliv/harness.hpp"
#include "paneliv/instrument.hpp"
#include "paneliv/render.hpp"
#include "paneliv/simlab.hpp"

namespace fs = std::filesystem;
using namespace paneliv;

namespace {

struct Output {
  std::string path;
  std::string format = "text";

  OutputFormat parsed() const { return parse_output_format(format); }

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path));
    out << text;
  }
};

void add_output_options(CLI::App* cmd, Output& out) {
  cmd->add_option("--out", out.path, "Write to this file instead of stdout");
  cmd->add_option("--format", out.format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}));
}

void print_notes(const std::vector<std::string>& notes) {
  for (const auto& n : notes) std::cerr << "note: " << n << '\n';
}

int report_status(const Report& r) {
  print_notes(r.notes);
  for (const auto& o : r.outcomes) {
    if (!o.ok()) std::cerr << "error: spec [" << o.name << "]: " << o.error << '\n';
  }
  return r.ok() ? 0 : 1;
}

template <typename T>
void write_file(const fs::path& path, const T& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  writer(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panel IV estimation and replication harness"};
  app.require_subcommand(1);

  // instrument build
  Output inst_out;
  std::string mortality_path, interventions_path;
  std::vector<int> extra_years;
  auto* instrument = app.add_subcommand("instrument", "Predicted-mortality instrument");
  instrument->require_subcommand(1);
  auto* build = instrument->add_subcommand("build", "Build predicted mortality from disease data");
  build->add_option("--mortality", mortality_path, "country,disease,year,mortality CSV")->required();
  build->add_option("--interventions", interventions_path,
                    "disease,intervention_year CSV (default: built-in schedule)");
  build->add_option("--years", extra_years, "Extra years to evaluate");
  add_output_options(build, inst_out);

  // run
  Output run_out;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the specs of a config file");
  run->add_option("--config", config_path, "Config file")->required();
  add_output_options(run, run_out);

  // replicate
  Output rep_out;
  std::string table_id, data_dir;
  auto* replicate = app.add_subcommand("replicate", "Run a table preset");
  replicate->add_option("--table", table_id, "T1..T16")->required();
  replicate->add_option("--data", data_dir, "Directory with the input CSVs")->required();
  add_output_options(replicate, rep_out);

  // simulate
  Output sim_out;
  std::string sim_config;
  std::optional<std::uint64_t> seed;
  int reps = 500;
  int threads = 0;
  std::string export_dir;
  auto* simulate = app.add_subcommand("simulate", "Exclusion-violation Monte Carlo");
  simulate->add_option("--config", sim_config, "Config with a [dgp] section")->required();
  simulate->add_option("--seed", seed, "Master seed (default: the config's seed)");
  simulate->add_option("--reps", reps, "Replications")->check(CLI::Range(2, 1000000));
  simulate->add_option("--threads", threads, "Worker threads (0: all cores)");
  simulate->add_option("--export", export_dir, "Write the first draw as CSV inputs to this directory");
  add_output_options(simulate, sim_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) {
      auto mortality = read_disease_mortality_csv(mortality_path);
      auto schedule = interventions_path.empty() ? InterventionSchedule::default_schedule()
                                                 : read_intervention_schedule_csv(interventions_path);
      schedule.check_covers(mortality);
      auto series = predicted_mortality(mortality, schedule, extra_years);
      if (inst_out.parsed() == OutputFormat::csv) {
        std::ostringstream s;
        write_predicted_mortality_csv(series, s);
        inst_out.write(s.str());
      } else {
        auto table = render_summary(instrument_summary(series), "Predicted mortality");
        for (const auto& [country, cov] : series.coverage) {
          if (cov.missing_cells) {
            table.footnotes.push_back(fmt::format("{}: {} of {} disease cells missing, counted as 0",
                                                  country, cov.missing_cells, cov.expected_cells));
          }
        }
        inst_out.write(table.to_text());
      }
      return 0;
    }
    if (run->parsed()) {
      auto cfg = load_run_config(config_path);
      if (run->count("--format")) cfg.format = run_out.parsed();
      Output out = run_out;
      if (out.path.empty()) out.path = cfg.output_path;
      auto data = load_data(cfg);
      auto report = build_report(cfg, data);
      out.write(report.table.format(cfg.format));
      return report_status(report);
    }
    if (replicate->parsed()) {
      auto report = replicate_preset(table_id, data_dir);
      rep_out.write(report.table.format(rep_out.parsed()));
      return report_status(report);
    }
    if (simulate->parsed()) {
      auto doc = config::parse_file(sim_config);
      auto cfg = parse_run_config(doc);
      auto dgp = DgpConfig::from_config(doc);
      const std::uint64_t master = seed.value_or(cfg.seed);
      if (!export_dir.empty()) {
        fs::create_directories(export_dir);
        auto draw = simulate_dgp(dgp, master);
        print_notes(draw.warnings);
        const fs::path dir(export_dir);
        write_file(dir / "country_year.csv",
                   [&](std::ostream& o) { write_country_year_csv(draw.panel, o); });
        write_file(dir / "groups.csv", [&](std::ostream& o) { write_country_groups_csv(draw.panel, o); });
        write_file(dir / "disease_mortality.csv",
                   [&](std::ostream& o) { write_disease_mortality_csv(draw.mortality, o); });
        write_file(dir / "interventions.csv", [&](std::ostream& o) {
          o << "disease,intervention_year\n";
          for (const auto& [d, y] : dgp.schedule.intervention_year) o << d << ',' << y << '\n';
        });
      }
      auto demo = exclusion_violation_demo(dgp, reps, master, sim_out.parsed(), threads);
      sim_out.write(demo.report);
      return 0;
    }
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
