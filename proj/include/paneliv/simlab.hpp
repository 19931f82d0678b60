#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paneliv/config.hpp"
#include "paneliv/instrument.hpp"
#include "paneliv/panel.hpp"
#include "paneliv/regress.hpp"
#include "paneliv/render.hpp"

namespace paneliv {

// Linear-Gaussian DGP for the instrument's exclusion failure. Per country i
// and year t (k_t decades after the first year):
//
//   g_i    ~ N(gdp_mean, gdp_sd)                       initial log GDP pc
//   m_i    = max(0, mortality_base - wealth_mortality_slope * g_i + e_m)
//   M_dit  = m_i s_di (1 - intervention_effect I_dt) (noisy after the first year)
//   x_it   = le_base + le_income_slope (g_i - gdp_mean) + le_trend k_t
//            + gamma_iv MI_it + u_it                   log life expectancy
//   y_it   = g_i + gdp_trend k_t + true_alpha (x_it - x_i0)
//            + rho_violation m_i k_t + v_it            log GDP pc
//
// with MI the predicted mortality built from M and the schedule, and
// corr(u, v) = confounding.
struct DgpConfig {
  int n_countries = 47;
  std::vector<int> years = {1940, 1950, 1960, 1970, 1980};
  double true_alpha = 0.0;
  double gamma_iv = -0.45;
  double rho_violation = 0.0;
  double wealth_mortality_slope = 0.3;
  double mortality_base = 2.9;
  double gdp_mean = 8.0;
  double gdp_sd = 0.8;
  double gdp_trend = 0.2;
  double le_base = 3.9;
  double le_trend = 0.05;
  double le_income_slope = 0.05;
  double intervention_effect = 0.8;
  double share_dispersion = 0.5;
  double confounding = 0.5;
  double noise_mortality = 0.1;
  double noise_le = 0.05;
  double noise_gdp = 0.1;
  // Share of countries, poorest first, tagged low_middle; the rest are rich.
  double low_middle_share = 36.0 / 47.0;
  InterventionSchedule schedule = InterventionSchedule::default_schedule();

  void validate() const;
  // Reads the [dgp] section; keys absent there keep their defaults.
  static DgpConfig from_config(const config::Document& doc);
};

struct SimulatedData {
  // log_gdppc, gdppc, log_le, le, log_gdp, population, log_pop,
  // log_births, pct_under20, fertility
  CountryYearPanel panel;
  DiseaseMortalityPanel mortality;
  PredictedMortalitySeries instrument;
  std::vector<double> initial_mortality;  // per country, after truncation
  std::size_t truncated = 0;
  std::vector<std::string> warnings;

  // panel with pred_mort merged in.
  CountryYearPanel estimation_panel() const;
};

SimulatedData simulate_dgp(const DgpConfig& config, std::uint64_t seed);

// Seed of replication r: splitmix64 of master + (r + 1) * golden gamma.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t replication);

// 2SLS of log_gdppc on log_le with pred_mort as instrument, country and year
// effects, first and last years only, HC1.
RegressionSpec main_iv_spec(const DgpConfig& config);

struct McResult {
  std::vector<double> estimates;  // replication order
  double mean = 0.0;
  double sd = 0.0;
  double bias = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  int reps = 0;
  std::uint64_t seed = 0;
  int failures = 0;
  std::vector<std::string> warnings;
};

// Aggregates over the sorted estimates so every statistic is invariant to
// the order of `estimates`.
McResult summarize_estimates(std::vector<double> estimates, double true_alpha);

// Replications run on `threads` workers (0 = hardware concurrency); the
// result does not depend on the thread count.
McResult monte_carlo_bias(const DgpConfig& config, int reps, std::uint64_t seed, int threads = 0);

struct ExclusionDemo {
  FitResult wealth_mortality;  // (a) pred_mort on log_gdppc, first year
  FitResult growth_mortality;  // (b) first-period change in log_gdppc on initial pred_mort
  McResult bias;               // (c)
  // Share of replications where (b)'s slope has |t| < 2.
  double share_insignificant = 0.0;
  std::vector<double> growth_t_statistics;
  std::string report;
};

ExclusionDemo exclusion_violation_demo(const DgpConfig& config, int reps, std::uint64_t seed,
                                       OutputFormat format = OutputFormat::text, int threads = 0);

}  // namespace paneliv
