#include "paneliv/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "paneliv/error.hpp"

namespace paneliv {

void DgpConfig::validate() const {
  if (n_countries < 2) throw SpecError(fmt::format("n_countries must be >= 2, got {}", n_countries));
  if (years.size() < 2) throw SpecError("a DGP needs at least two years");
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] <= years[i - 1]) throw SpecError("DGP years must be strictly increasing");
  }
  const std::pair<const char*, double> positive[] = {
      {"noise_mortality", noise_mortality}, {"noise_le", noise_le},
      {"noise_gdp", noise_gdp}, {"gdp_sd", gdp_sd}};
  for (const auto& [name, v] : positive) {
    if (!(v > 0.0)) throw SpecError(fmt::format("{} must be positive, got {}", name, v));
  }
  if (!(share_dispersion >= 0.0)) throw SpecError("share_dispersion must be nonnegative");
  if (!(confounding >= -1.0 && confounding <= 1.0)) throw SpecError("confounding must lie in [-1, 1]");
  if (!(intervention_effect >= 0.0 && intervention_effect <= 1.0)) {
    throw SpecError("intervention_effect must lie in [0, 1]");
  }
  if (!(low_middle_share >= 0.0 && low_middle_share <= 1.0)) {
    throw SpecError("low_middle_share must lie in [0, 1]");
  }
  schedule.validate();
}

namespace {

std::vector<int> parse_years(const config::Document& doc, const config::Entry& e) {
  auto to_int = [&](std::string_view s) {
    s = config::trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      doc.fail(e.line, fmt::format("bad year '{}' in '{}'", s, e.value));
    }
    return v;
  };
  std::vector<int> out;
  if (e.value.find(':') != std::string::npos) {
    // first:last:step
    std::vector<int> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= e.value.size(); ++i) {
      if (i == e.value.size() || e.value[i] == ':') {
        parts.push_back(to_int(std::string_view(e.value).substr(start, i - start)));
        start = i + 1;
      }
    }
    if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0]) {
      doc.fail(e.line, fmt::format("years range must be first:last:step, got '{}'", e.value));
    }
    for (int y = parts[0]; y <= parts[1]; y += parts[2]) out.push_back(y);
    return out;
  }
  for (const auto& item : config::split_list(e.value)) out.push_back(to_int(item));
  return out;
}

}  // namespace

DgpConfig DgpConfig::from_config(const config::Document& doc) {
  DgpConfig c;
  const auto* section = doc.find("dgp");
  if (!section) return c;
  const std::pair<const char*, double DgpConfig::*> reals[] = {
      {"true_alpha", &DgpConfig::true_alpha},
      {"gamma_iv", &DgpConfig::gamma_iv},
      {"rho_violation", &DgpConfig::rho_violation},
      {"wealth_mortality_slope", &DgpConfig::wealth_mortality_slope},
      {"mortality_base", &DgpConfig::mortality_base},
      {"gdp_mean", &DgpConfig::gdp_mean},
      {"gdp_sd", &DgpConfig::gdp_sd},
      {"gdp_trend", &DgpConfig::gdp_trend},
      {"le_base", &DgpConfig::le_base},
      {"le_trend", &DgpConfig::le_trend},
      {"le_income_slope", &DgpConfig::le_income_slope},
      {"intervention_effect", &DgpConfig::intervention_effect},
      {"share_dispersion", &DgpConfig::share_dispersion},
      {"confounding", &DgpConfig::confounding},
      {"noise_mortality", &DgpConfig::noise_mortality},
      {"noise_le", &DgpConfig::noise_le},
      {"noise_gdp", &DgpConfig::noise_gdp},
      {"low_middle_share", &DgpConfig::low_middle_share},
  };
  for (const auto& e : section->entries) {
    if (e.key == "n_countries") {
      int v = 0;
      auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
      if (ec != std::errc() || p != e.value.data() + e.value.size()) {
        doc.fail(e.line, fmt::format("n_countries must be an integer, got '{}'", e.value));
      }
      c.n_countries = v;
      continue;
    }
    if (e.key == "years") {
      c.years = parse_years(doc, e);
      continue;
    }
    if (e.key == "interventions") {
      try {
        c.schedule = read_intervention_schedule_csv(doc.resolve(e.value));
      } catch (const Error& err) {
        doc.fail(e.line, err.what());
      }
      continue;
    }
    auto it = std::find_if(std::begin(reals), std::end(reals),
                           [&](const auto& r) { return e.key == r.first; });
    if (it == std::end(reals)) doc.fail(e.line, fmt::format("unknown key '{}' in [dgp]", e.key));
    double v = 0.0;
    auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || p != e.value.data() + e.value.size() || !std::isfinite(v)) {
      doc.fail(e.line, fmt::format("'{}' must be a finite number, got '{}'", e.key, e.value));
    }
    c.*(it->second) = v;
  }
  try {
    c.validate();
  } catch (const Error& err) {
    doc.fail(section->line, err.what());
  }
  return c;
}

CountryYearPanel SimulatedData::estimation_panel() const {
  return merge_instrument(panel, instrument, "pred_mort");
}

SimulatedData simulate_dgp(const DgpConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  auto z = [&] { return normal(engine); };

  const auto n = static_cast<std::size_t>(c.n_countries);
  const int t0 = c.years.front();
  std::vector<std::string> diseases;
  for (const auto& [d, y] : c.schedule.intervention_year) diseases.push_back(d);

  SimulatedData out;
  std::vector<double> g0(n), log_pop0(n);
  std::vector<std::string> ids(n);
  std::vector<DiseaseMortalityPanel::Record> records;
  out.initial_mortality.resize(n);

  // Every country draws the same sequence of variates, so results depend on
  // the seed alone.
  struct Shocks {
    double u, v, pop, births, young, fert;
  };
  std::vector<std::vector<Shocks>> shocks(n);
  const double sm = c.noise_mortality;
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = fmt::format("C{:03}", i + 1);
    g0[i] = c.gdp_mean + c.gdp_sd * z();
    double m0 = c.mortality_base - c.wealth_mortality_slope * g0[i] + sm * z();
    if (m0 < 0.0) {
      m0 = 0.0;
      ++out.truncated;
    }
    out.initial_mortality[i] = m0;
    log_pop0[i] = 8.5 + 1.2 * z();

    std::vector<double> share(diseases.size());
    for (auto& s : share) s = std::exp(c.share_dispersion * z());
    const double total = std::accumulate(share.begin(), share.end(), 0.0);
    for (auto& s : share) s /= total;

    for (int year : c.years) {
      for (std::size_t d = 0; d < diseases.size(); ++d) {
        double m = m0 * share[d];
        if (year != t0) {
          m *= (1.0 - c.intervention_effect * intervention_indicator(c.schedule, diseases[d], year)) *
               std::exp(sm * z() - 0.5 * sm * sm);
        }
        records.push_back({ids[i], diseases[d], year, m});
      }
      shocks[i].push_back({z(), z(), z(), z(), z(), z()});
    }
  }
  out.mortality = DiseaseMortalityPanel::from_records(std::move(records), diseases);
  out.instrument = predicted_mortality(out.mortality, c.schedule, c.years);

  std::vector<std::string> vars{"log_gdppc", "gdppc", "log_le", "le", "log_gdp", "population",
                                "log_pop", "log_births", "pct_under20", "fertility"};
  PanelBuilder builder(vars);
  const double rho_uv = c.confounding;
  const double orth = std::sqrt(1.0 - rho_uv * rho_uv);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return g0[a] < g0[b]; });
  const auto n_low = static_cast<std::size_t>(std::lround(c.low_middle_share * static_cast<double>(n)));
  std::vector<CountryGroup> group(n, CountryGroup::rich);
  for (std::size_t r = 0; r < n_low; ++r) group[order[r]] = CountryGroup::low_middle;

  for (std::size_t i = 0; i < n; ++i) {
    double x0 = 0.0;
    for (std::size_t t = 0; t < c.years.size(); ++t) {
      const int year = c.years[t];
      const double k = (year - t0) / 10.0;
      const auto& s = shocks[i][t];
      const double mi = out.instrument.at(ids[i], year).value_or(0.0);
      const double x = c.le_base + c.le_income_slope * (g0[i] - c.gdp_mean) + c.le_trend * k +
                       c.gamma_iv * mi + c.noise_le * s.u;
      if (t == 0) x0 = x;
      const double dx = x - x0;
      const double y = g0[i] + c.gdp_trend * k + c.true_alpha * dx +
                       c.rho_violation * out.initial_mortality[i] * k +
                       c.noise_gdp * (rho_uv * s.u + orth * s.v);
      // Demographic columns feed the population-outcome tables; their
      // coefficients are fixed.
      const double pop = std::max(1.0, std::round(std::exp(log_pop0[i] + 0.15 * k + 0.5 * dx + 0.02 * s.pop)));
      const double log_pop = std::log(pop);
      builder.add({ids[i], year, 0},
                  {y, std::exp(y), x, std::exp(x), y + log_pop, pop, log_pop,
                   log_pop - 3.3 + 0.8 * dx + 0.05 * s.births, 40.0 + 10.0 * dx + s.young,
                   6.0 - 4.0 * dx - 0.1 * k + 0.2 * s.fert});
    }
    builder.set_meta(ids[i], {group[i], fmt::format("Country {}", i + 1)});
  }
  out.panel = std::move(builder).build(c.years);

  if (static_cast<double>(out.truncated) > 0.05 * static_cast<double>(n)) {
    out.warnings.push_back(fmt::format(
        "{} of {} initial mortality draws truncated at 0; the linear mortality channel is distorted",
        out.truncated, n));
  }
  return out;
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t replication) {
  std::uint64_t x = master + 0x9E3779B97F4A7C15ULL * (replication + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RegressionSpec main_iv_spec(const DgpConfig& config) {
  RegressionSpec s;
  s.dependent = "log_gdppc";
  s.endogenous = {"log_le"};
  s.instruments = {"pred_mort"};
  s.country_effects = true;
  s.year_effects = true;
  s.vcov = VcovKind::robust();
  TransformKind t;
  t.kind = TransformKind::Kind::levels_panel;
  t.start_year = config.years.front();
  t.end_year = config.years.back();
  t.endpoints_only = true;
  s.transforms = {t};
  return s;
}

McResult summarize_estimates(std::vector<double> estimates, double true_alpha) {
  if (estimates.size() < 2) throw EstimationError("Monte Carlo summary needs at least two estimates");
  std::vector<double> sorted = estimates;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  McResult r;
  r.estimates = std::move(estimates);
  r.mean = mean;
  r.sd = std::sqrt(ss / (n - 1.0));
  r.bias = mean - true_alpha;
  const double half = 1.96 * r.sd / std::sqrt(n);
  r.ci95_low = mean - half;
  r.ci95_high = mean + half;
  r.reps = static_cast<int>(r.estimates.size());
  return r;
}

namespace {

template <typename T>
std::vector<std::optional<T>> run_replications(int reps, int threads,
                                               const std::function<T(int)>& body) {
  std::vector<std::optional<T>> results(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      try {
        results[static_cast<std::size_t>(r)] = body(r);
      } catch (const Error&) {
        results[static_cast<std::size_t>(r)].reset();
      }
    }
  };
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, std::max(1, reps));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

void check_failures(int failures, int reps) {
  if (failures * 10 > reps) {
    throw EstimationError(
        fmt::format("{} of {} Monte Carlo replications failed (more than 10%)", failures, reps));
  }
}

double iv_estimate(const DgpConfig& config, std::uint64_t seed) {
  const auto sim = simulate_dgp(config, seed);
  return fit_tsls(main_iv_spec(config), sim.estimation_panel()).coefficient("log_le");
}

RegressionSpec wealth_spec(const DgpConfig& c) {
  RegressionSpec s;
  s.dependent = "pred_mort";
  s.exogenous = {"log_gdppc"};
  s.vcov = VcovKind::robust();
  TransformKind t;
  t.kind = TransformKind::Kind::levels_panel;
  t.start_year = t.end_year = c.years.front();
  s.transforms = {t};
  return s;
}

RegressionSpec growth_spec(const DgpConfig& c) {
  RegressionSpec s;
  s.dependent = "log_gdppc";
  s.exogenous = {fmt::format("pred_mort@{}", c.years.front())};
  s.vcov = VcovKind::robust();
  TransformKind t;
  t.kind = TransformKind::Kind::long_difference;
  t.start_year = c.years[0];
  t.end_year = c.years[1];
  s.transforms = {t};
  return s;
}

}  // namespace

McResult monte_carlo_bias(const DgpConfig& config, int reps, std::uint64_t seed, int threads) {
  config.validate();
  if (reps < 2) throw SpecError(fmt::format("reps must be >= 2, got {}", reps));
  const auto results = run_replications<double>(
      reps, threads, [&](int r) { return iv_estimate(config, replication_seed(seed, r)); });
  std::vector<double> estimates;
  int failures = 0;
  for (const auto& v : results) {
    if (v) estimates.push_back(*v);
    else ++failures;
  }
  check_failures(failures, reps);
  auto out = summarize_estimates(std::move(estimates), config.true_alpha);
  out.seed = seed;
  out.failures = failures;
  if (failures) {
    out.warnings.push_back(fmt::format("{} of {} replications failed and are excluded", failures, reps));
  }
  return out;
}

ExclusionDemo exclusion_violation_demo(const DgpConfig& config, int reps, std::uint64_t seed,
                                       OutputFormat format, int threads) {
  config.validate();
  if (reps < 2) throw SpecError(fmt::format("reps must be >= 2, got {}", reps));
  ExclusionDemo demo;
  const auto draw = simulate_dgp(config, seed);
  const auto panel = draw.estimation_panel();
  demo.wealth_mortality = fit_ols(wealth_spec(config), panel);
  demo.growth_mortality = fit_ols(growth_spec(config), panel);

  struct Rep {
    double alpha;
    double t_growth;
  };
  const auto growth_name = growth_spec(config).exogenous.front();
  const auto results = run_replications<Rep>(reps, threads, [&](int r) {
    const auto sim = simulate_dgp(config, replication_seed(seed, r));
    const auto p = sim.estimation_panel();
    const double a = fit_tsls(main_iv_spec(config), p).coefficient("log_le");
    const double t = fit_ols(growth_spec(config), p).t_statistic(growth_name);
    return Rep{a, t};
  });
  std::vector<double> estimates;
  int failures = 0;
  int quiet = 0;
  for (const auto& v : results) {
    if (!v) {
      ++failures;
      continue;
    }
    estimates.push_back(v->alpha);
    demo.growth_t_statistics.push_back(v->t_growth);
    quiet += std::fabs(v->t_growth) < 2.0;
  }
  check_failures(failures, reps);
  demo.bias = summarize_estimates(std::move(estimates), config.true_alpha);
  demo.bias.seed = seed;
  demo.bias.failures = failures;
  demo.share_insignificant =
      static_cast<double>(quiet) / static_cast<double>(demo.growth_t_statistics.size());

  const int t0 = config.years[0];
  const int t1 = config.years[1];
  TableLayout a_layout;
  a_layout.title = fmt::format("(a) Initial predicted mortality on log GDP per capita, {}", t0);
  a_layout.rows = {"log_gdppc", "_cons"};
  a_layout.row_labels = {{"log_gdppc", "Log GDP per capita"}, {"_cons", "Constant"}};
  a_layout.stats = {"n", "r2"};
  a_layout.coefficient_precision = 3;
  TableLayout b_layout;
  b_layout.title = fmt::format("(b) Change in log GDP per capita {}-{} on initial predicted mortality", t0, t1);
  b_layout.rows = {growth_name, "_cons"};
  b_layout.row_labels = {{growth_name, "Initial predicted mortality"}, {"_cons", "Constant"}};
  b_layout.stats = {"n", "r2"};
  b_layout.coefficient_precision = 3;
  const auto a = render_table({{"Synthetic draw", "", demo.wealth_mortality, std::nullopt, ""}}, a_layout);
  auto b = render_table({{"Synthetic draw", "", demo.growth_mortality, std::nullopt, ""}}, b_layout);
  b.footnotes.insert(b.footnotes.begin(),
                     fmt::format("Across {} replications, |t| < 2 in {} of them ({}).",
                                 demo.growth_t_statistics.size(), quiet,
                                 format_fixed(demo.share_insignificant, 3)));

  RenderedTable c;
  c.title = fmt::format("(c) 2SLS estimates of the life-expectancy effect, {} replications", reps);
  c.headers = {"Value"};
  const auto& m = demo.bias;
  c.body = {
      {"True effect", {format_fixed(config.true_alpha, 3)}, false},
      {"Violation channel (rho)", {format_fixed(config.rho_violation, 3)}, false},
      {"Mean estimate", {format_fixed(m.mean, 3)}, false},
      {"Standard deviation", {format_fixed(m.sd, 3)}, false},
      {"Bias", {format_fixed(m.bias, 3)}, false},
      {"95% CI for the mean",
       {fmt::format("[{}, {}]", format_fixed(m.ci95_low, 3), format_fixed(m.ci95_high, 3))}, false},
      {"Failed replications", {std::to_string(m.failures)}, false},
      {"Master seed", {std::to_string(seed)}, false},
  };
  c.footnotes.push_back(fmt::format("2SLS of log GDP per capita on log life expectancy with predicted mortality as instrument, "
                  "country and year effects, years {} and {}.", t0, config.years.back()));
  for (const auto& w : draw.warnings) c.footnotes.push_back(w);

  demo.report = a.format(format);
  demo.report += "\n";
  demo.report += b.format(format);
  demo.report += "\n";
  demo.report += c.format(format);
  return demo;
}

}  // namespace paneliv
