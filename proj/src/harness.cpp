#include "paneliv/harness.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "paneliv/error.hpp"
#include "paneliv/resources.hpp"

namespace paneliv {

namespace {

bool parse_bool(const config::Document& doc, const config::Entry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  doc.fail(e.line, fmt::format("'{}' must be true or false, got '{}'", e.key, e.value));
}

int parse_integer(const config::Document& doc, const config::Entry& e) {
  int v = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || p != e.value.data() + e.value.size()) {
    doc.fail(e.line, fmt::format("'{}' must be an integer, got '{}'", e.key, e.value));
  }
  return v;
}

SampleFilter parse_sample(const config::Document& doc, const config::Entry& e) {
  if (e.value == "all") return SampleFilter::all();
  if (e.value == "base") return SampleFilter::base_sample();
  if (e.value == "low_middle") return SampleFilter::low_middle_income();
  if (e.value == "list") return {SampleFilter::Mode::explicit_list, {}};
  doc.fail(e.line, fmt::format("sample must be all, base, low_middle or list, got '{}'", e.value));
}

NamedSpec parse_spec(const config::Document& doc, const config::Section& section) {
  NamedSpec out;
  out.name = section.name;
  out.line = section.line;
  auto& s = out.spec;
  s.vcov = VcovKind::classical();
  std::string cluster = "country";
  std::optional<std::size_t> countries_line;
  for (const auto& e : section.entries) {
    try {
      const auto& k = e.key;
      if (k == "estimator") {
        if (e.value == "ols") out.estimator = NamedSpec::Estimator::ols;
        else if (e.value == "tsls") out.estimator = NamedSpec::Estimator::tsls;
        else if (e.value == "first_stage") out.estimator = NamedSpec::Estimator::first_stage;
        else doc.fail(e.line, fmt::format("estimator must be ols, tsls or first_stage, got '{}'", e.value));
      } else if (k == "dependent") {
        validate_expression(e.value);
        s.dependent = e.value;
      } else if (k == "exogenous" || k == "endogenous" || k == "instruments") {
        auto items = config::split_list(e.value);
        for (const auto& v : items) validate_expression(v);
        (k == "exogenous" ? s.exogenous : k == "endogenous" ? s.endogenous : s.instruments) = items;
      } else if (k == "fixed_effects") {
        for (const auto& v : config::split_list(e.value)) {
          if (v == "country") s.country_effects = true;
          else if (v == "year") s.year_effects = true;
          else if (v != "none") doc.fail(e.line, fmt::format("unknown fixed effect '{}'", v));
        }
      } else if (k == "weight") {
        validate_expression(e.value);
        s.weight = e.value;
      } else if (k == "vcov") {
        if (e.value == "classical") s.vcov.type = VcovKind::Type::classical;
        else if (e.value == "robust") s.vcov.type = VcovKind::Type::robust_hc1;
        else if (e.value == "cluster") s.vcov.type = VcovKind::Type::cluster;
        else doc.fail(e.line, fmt::format("vcov must be classical, robust or cluster, got '{}'", e.value));
      } else if (k == "cluster") {
        cluster = e.value;
      } else if (k == "sample") {
        auto keep = std::move(s.sample.countries);
        s.sample = parse_sample(doc, e);
        s.sample.countries = std::move(keep);
      } else if (k == "countries") {
        s.sample.countries = config::split_list(e.value);
        countries_line = e.line;
      } else if (k == "transform") {
        s.transforms = parse_transforms(e.value);
      } else if (k == "intercept") {
        s.include_intercept = parse_bool(doc, e);
      } else if (k == "drop_collinear") {
        s.drop_collinear = parse_bool(doc, e);
      } else if (k == "weak_iv") {
        out.weak_iv = parse_bool(doc, e);
      } else if (k == "dataset") {
        if (e.value == "country_year") {
          out.dataset = NamedSpec::Dataset::country_year;
        } else if (e.value.starts_with("zeroth_stage(") && e.value.back() == ')') {
          out.dataset = NamedSpec::Dataset::zeroth_stage;
          config::Entry inner{e.key, e.value.substr(13, e.value.size() - 14), e.line};
          out.zeroth_stage_lags = parse_integer(doc, inner);
        } else if (e.value == "zeroth_stage") {
          out.dataset = NamedSpec::Dataset::zeroth_stage;
        } else {
          doc.fail(e.line, fmt::format("dataset must be country_year or zeroth_stage(L), got '{}'", e.value));
        }
      } else if (k == "label") {
        out.label = e.value;
      } else if (k == "panel") {
        out.panel = e.value;
      } else {
        doc.fail(e.line, fmt::format("unknown key '{}' in spec [{}]", k, section.name));
      }
    } catch (const config::ConfigError&) {
      throw;
    } catch (const Error& err) {
      doc.fail(e.line, err.what());
    }
  }
  if (s.vcov.type == VcovKind::Type::cluster) s.vcov.cluster_variable = cluster;
  if (countries_line && s.sample.mode != SampleFilter::Mode::explicit_list) {
    doc.fail(*countries_line, "'countries' needs sample = list");
  }
  if (out.estimator == NamedSpec::Estimator::ols && s.is_iv()) {
    doc.fail(section.line, fmt::format("spec [{}]: ols takes no endogenous variables", out.name));
  }
  if (out.estimator != NamedSpec::Estimator::ols && !s.is_iv()) {
    doc.fail(section.line, fmt::format("spec [{}]: {} needs endogenous variables and instruments",
                                       out.name, out.estimator == NamedSpec::Estimator::tsls
                                                     ? "tsls" : "first_stage"));
  }
  try {
    s.validate();
  } catch (const Error& err) {
    doc.fail(section.line, fmt::format("spec [{}]: {}", out.name, err.what()));
  }
  return out;
}

void parse_layout(const config::Document& doc, const config::Section& section, RunConfig& cfg) {
  auto& l = cfg.layout;
  for (const auto& e : section.entries) {
    const auto& k = e.key;
    if (k == "kind") {
      if (e.value == "regressions") cfg.kind = RunConfig::Kind::regressions;
      else if (e.value == "instrument_summary") cfg.kind = RunConfig::Kind::instrument_summary;
      else if (e.value == "schedule") cfg.kind = RunConfig::Kind::schedule;
      else doc.fail(e.line, fmt::format("unknown layout kind '{}'", e.value));
    } else if (k == "title") {
      l.title = e.value;
    } else if (k == "rows") {
      l.rows = config::split_list(e.value);
    } else if (k == "stats") {
      l.stats = config::split_list(e.value);
      for (const auto& key : l.stats) {
        const auto& known = statistic_keys();
        if (std::none_of(known.begin(), known.end(), [&](const auto& p) { return p.first == key; })) {
          doc.fail(e.line, fmt::format("unknown statistic '{}'", key));
        }
      }
    } else if (k.starts_with("label.")) {
      l.row_labels[k.substr(6)] = e.value;
    } else if (k == "coef_precision") {
      l.coefficient_precision = parse_integer(doc, e);
    } else if (k == "stat_precision") {
      l.statistic_precision = parse_integer(doc, e);
    } else if (k == "footnote") {
      std::size_t start = 0;
      for (std::size_t i = 0; i <= e.value.size(); ++i) {
        if (i == e.value.size() || e.value[i] == '|') {
          auto piece = config::trim(std::string_view(e.value).substr(start, i - start));
          if (!piece.empty()) l.footnotes.emplace_back(piece);
          start = i + 1;
        }
      }
    } else if (k == "auto_footnotes") {
      l.auto_footnotes = parse_bool(doc, e);
    } else if (k == "sample") {
      cfg.summary_sample = parse_sample(doc, e);
    } else {
      doc.fail(e.line, fmt::format("unknown key '{}' in [layout]", k));
    }
  }
  if (l.coefficient_precision < 0 || l.coefficient_precision > 12 || l.statistic_precision < 0 ||
      l.statistic_precision > 12) {
    doc.fail(section.line, "precision must be between 0 and 12");
  }
}

void parse_seed(const config::Document& doc, const config::Entry& e, RunConfig& cfg) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || p != e.value.data() + e.value.size()) {
    doc.fail(e.line, fmt::format("seed must be a nonnegative integer, got '{}'", e.value));
  }
  cfg.seed = v;
}

}  // namespace

RunConfig parse_run_config(const config::Document& doc) {
  RunConfig cfg;
  cfg.source = doc.source;
  for (const auto& section : doc.sections) {
    if (section.name.empty() || section.name == "run") {
      for (const auto& e : section.entries) {
        if (e.key == "seed") parse_seed(doc, e, cfg);
        else doc.fail(e.line, fmt::format("unknown key '{}' outside a spec", e.key));
      }
    } else if (section.name == "data") {
      for (const auto& e : section.entries) {
        auto path = doc.resolve(e.value);
        if (e.key == "country_year") cfg.data.country_year = path;
        else if (e.key == "groups") cfg.data.groups = path;
        else if (e.key == "disease_mortality") cfg.data.disease_mortality = path;
        else if (e.key == "interventions") cfg.data.interventions = path;
        else doc.fail(e.line, fmt::format("unknown key '{}' in [data]", e.key));
      }
    } else if (section.name == "output") {
      for (const auto& e : section.entries) {
        if (e.key == "format") {
          try {
            cfg.format = parse_output_format(e.value);
          } catch (const Error& err) {
            doc.fail(e.line, err.what());
          }
        } else if (e.key == "path") {
          cfg.output_path = doc.resolve(e.value).string();
        } else {
          doc.fail(e.line, fmt::format("unknown key '{}' in [output]", e.key));
        }
      }
    } else if (section.name == "layout") {
      parse_layout(doc, section, cfg);
    } else if (section.name == "dgp") {
      continue;
    } else {
      cfg.specs.push_back(parse_spec(doc, section));
    }
  }
  if (cfg.kind == RunConfig::Kind::regressions && cfg.specs.empty() && !doc.find("dgp")) {
    throw config::ConfigError(doc.source, 0, "config declares no regression specs");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(config::parse_file(path));
}

LoadedData load_data(const RunConfig& config) {
  LoadedData out;
  const auto& paths = config.data;
  auto present = [&](const std::filesystem::path& p, std::string_view role) {
    if (p.empty()) return false;
    if (std::filesystem::exists(p)) return true;
    if (config.optional_files) return false;
    throw DataError(fmt::format("{} file '{}' does not exist", role, p.string()));
  };

  out.schedule = present(paths.interventions, "interventions")
                     ? read_intervention_schedule_csv(paths.interventions)
                     : InterventionSchedule::default_schedule();
  if (present(paths.country_year, "country_year")) {
    auto panel = ingest_country_year_csv(paths.country_year);
    if (present(paths.groups, "groups")) panel = attach_country_groups(panel, paths.groups);
    out.country_year = std::move(panel);
  }
  if (present(paths.disease_mortality, "disease_mortality")) {
    out.mortality = read_disease_mortality_csv(paths.disease_mortality);
    out.schedule.check_covers(*out.mortality);
    std::vector<int> grid;
    if (out.country_year) grid = out.country_year->year_grid();
    out.instrument = predicted_mortality(*out.mortality, out.schedule, grid);
    std::size_t incomplete = 0;
    for (const auto& [country, cov] : out.instrument->coverage) incomplete += cov.missing_cells > 0;
    if (incomplete) {
      out.notes.push_back(fmt::format(
          "{} countries have disease cells without records; they count as zero mortality",
          incomplete));
    }
    if (out.country_year) {
      if (out.country_year->has_variable("pred_mort")) {
        out.notes.push_back("pred_mort in the country-year file is replaced by the constructed instrument");
      }
      out.country_year = merge_instrument(*out.country_year, *out.instrument, "pred_mort");
    }
  }
  return out;
}

namespace {

SpecOutcome run_one(const NamedSpec& named, const LoadedData& data) {
  SpecOutcome out;
  out.name = named.name;
  out.spec = named;
  try {
    CountryYearPanel zeroth;
    const CountryYearPanel* panel = nullptr;
    if (named.dataset == NamedSpec::Dataset::zeroth_stage) {
      if (!data.mortality) throw DataError("zeroth-stage spec needs disease mortality data");
      std::map<std::string, CountryMeta, std::less<>> meta;
      if (data.country_year) meta = data.country_year->country_meta();
      zeroth = zeroth_stage_dataset(*data.mortality, data.schedule, named.zeroth_stage_lags)
                   .to_panel(meta);
      panel = &zeroth;
    } else {
      if (!data.country_year) throw DataError("spec needs country-year data");
      panel = &*data.country_year;
    }
    switch (named.estimator) {
      case NamedSpec::Estimator::ols: out.fit = fit_ols(named.spec, *panel); break;
      case NamedSpec::Estimator::tsls: out.fit = fit_tsls(named.spec, *panel); break;
      case NamedSpec::Estimator::first_stage: {
        auto stages = first_stage(named.spec, *panel);
        out.fit = std::move(stages.front());
        break;
      }
    }
    if (named.weak_iv) out.weak_iv = weak_iv_report(named.spec, *panel);
  } catch (const std::exception& e) {
    out.fit.reset();
    out.weak_iv.reset();
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::vector<SpecOutcome> run_specs(const RunConfig& config, const LoadedData& data) {
  std::vector<SpecOutcome> out;
  out.reserve(config.specs.size());
  for (const auto& s : config.specs) out.push_back(run_one(s, data));
  return out;
}

std::vector<SpecOutcome> run_config(const std::filesystem::path& path) {
  const auto cfg = load_run_config(path);
  return run_specs(cfg, load_data(cfg));
}

bool Report::ok() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.ok(); });
}

Report build_report(const RunConfig& config, const LoadedData& data) {
  Report r;
  r.notes = data.notes;
  switch (config.kind) {
    case RunConfig::Kind::regressions: {
      r.outcomes = run_specs(config, data);
      std::vector<TableColumn> columns;
      for (const auto& o : r.outcomes) {
        columns.push_back({o.spec.label, o.spec.panel, o.fit, o.weak_iv, o.error});
      }
      r.table = render_table(columns, config.layout);
      break;
    }
    case RunConfig::Kind::instrument_summary: {
      if (!data.instrument) throw DataError("instrument summary needs disease mortality data");
      PredictedMortalitySeries series;
      std::set<std::string, std::less<>> keep;
      if (config.summary_sample.mode != SampleFilter::Mode::all) {
        if (!data.country_year) throw DataError("a summary sample needs country-year data");
        for (const auto& c : filter_sample(*data.country_year, config.summary_sample).countries()) {
          keep.insert(c);
        }
      }
      for (const auto& [key, v] : data.instrument->values) {
        if (keep.empty() || keep.count(key.first)) series.values.emplace(key, v);
      }
      r.table = render_summary(instrument_summary(series), config.layout.title,
                               config.layout.statistic_precision);
      if (config.summary_sample.mode != SampleFilter::Mode::all) {
        r.table.footnotes.push_back(
            fmt::format("Sample: {}.", config.summary_sample.describe()));
      }
      break;
    }
    case RunConfig::Kind::schedule:
      r.table = render_schedule(data.schedule, config.layout.title);
      break;
  }
  if (config.kind != RunConfig::Kind::regressions) {
    r.table.footnotes.insert(r.table.footnotes.end(), config.layout.footnotes.begin(),
                             config.layout.footnotes.end());
  }
  return r;
}

std::vector<std::string> preset_ids() {
  std::vector<std::string> out;
  for (int i = 1; i <= 16; ++i) out.push_back(fmt::format("T{}", i));
  return out;
}

std::string_view preset_text(std::string_view table_id) {
  const auto ids = preset_ids();
  if (std::find(ids.begin(), ids.end(), table_id) == ids.end()) {
    throw SpecError(fmt::format("unknown table '{}'; presets are T1..T16", table_id));
  }
  return resources::get(fmt::format("t{:02}.cfg", std::stoi(std::string(table_id.substr(1)))));
}

Report replicate_preset(std::string_view table_id, const std::filesystem::path& data_dir) {
  auto doc = config::parse_string(preset_text(table_id), fmt::format("preset {}", table_id), data_dir);
  auto cfg = parse_run_config(doc);
  cfg.optional_files = true;
  auto data = load_data(cfg);

  std::vector<std::string> needs;
  auto need = [&](std::string what) {
    if (std::find(needs.begin(), needs.end(), what) == needs.end()) needs.push_back(std::move(what));
  };
  const bool wants_mortality =
      cfg.kind == RunConfig::Kind::instrument_summary ||
      std::any_of(cfg.specs.begin(), cfg.specs.end(), [](const auto& s) {
        return s.dataset == NamedSpec::Dataset::zeroth_stage;
      });
  if (wants_mortality && !data.mortality) need("disease_mortality.csv");
  for (const auto& s : cfg.specs) {
    if (s.dataset != NamedSpec::Dataset::country_year) continue;
    if (!data.country_year) {
      need("country_year.csv");
      continue;
    }
    for (const auto& v : unresolved_variables(s.spec, *data.country_year)) {
      need(v == "pred_mort" && !data.mortality ? "disease_mortality.csv (for pred_mort)"
                                               : fmt::format("column '{}' in country_year.csv", v));
    }
    if (s.spec.sample.mode == SampleFilter::Mode::base_sample ||
        s.spec.sample.mode == SampleFilter::Mode::low_middle_income) {
      const auto countries = data.country_year->countries();
      if (std::any_of(countries.begin(), countries.end(),
                      [&](const auto& c) { return !data.country_year->meta(c); })) {
        need("groups.csv tagging every country");
      }
    }
  }
  if (!needs.empty()) {
    throw DataError(fmt::format("table {} needs {} in '{}'", table_id, fmt::join(needs, ", "),
                                data_dir.string()));
  }
  return build_report(cfg, data);
}

}  // namespace paneliv
