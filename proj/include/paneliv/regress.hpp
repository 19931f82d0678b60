#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "paneliv/panel.hpp"
#include "paneliv/transform.hpp"

namespace paneliv {

struct VcovKind {
  enum class Type { classical, robust_hc1, cluster };
  Type type = Type::classical;
  // "country" clusters on the panel's unit id; any other name is a column
  // whose values label the clusters.
  std::string cluster_variable;

  static VcovKind classical() { return {}; }
  static VcovKind robust() { return {Type::robust_hc1, {}}; }
  static VcovKind cluster(std::string variable) { return {Type::cluster, std::move(variable)}; }

  void validate() const;
  std::string describe() const;
};

struct RegressionSpec {
  std::string dependent;
  std::vector<std::string> exogenous;
  std::vector<std::string> endogenous;
  std::vector<std::string> instruments;
  bool country_effects = false;
  bool year_effects = false;
  // Frequency weight variable; empty when unweighted.
  std::string weight;
  VcovKind vcov;
  SampleFilter sample;
  std::vector<TransformKind> transforms;
  bool include_intercept = true;
  // Drop collinear columns instead of failing.
  bool drop_collinear = false;

  void validate() const;
  bool is_iv() const noexcept { return !endogenous.empty(); }
  // Every variable expression the spec reads, with its role.
  std::vector<VariableRequest> requests() const;
};

struct FitResult {
  std::string estimator;  // "ols" or "tsls"
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd t_statistics;
  Eigen::VectorXd p_values;

  // Sum of weights under frequency weighting, else the row count.
  double n_observations = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_countries = 0;
  std::size_t n_clusters = 0;
  std::size_t n_periods = 0;
  // Parameters including absorbed country effects.
  std::size_t k_parameters = 0;
  std::size_t n_absorbed = 0;
  double dof_residual = 0.0;
  // Degrees of freedom behind the reported p-values (G - 1 when clustered).
  double dof_inference = 0.0;
  double r_squared = 0.0;
  double rss = 0.0;
  double tss = 0.0;

  Eigen::VectorXd residuals;
  std::vector<ObservationKey> row_keys;
  std::vector<FitResult> first_stages;

  VcovKind vcov;
  std::string weight;
  std::vector<std::string> dropped;
  std::vector<std::string> notes;

  bool has(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws SpecError
  double coefficient(std::string_view name) const;
  double standard_error(std::string_view name) const;
  double t_statistic(std::string_view name) const;
  double p_value(std::string_view name) const;
};

// Flat `key = value` text record, one line per field.
std::string to_record(const FitResult& fit);

// Fixed-effects OLS. Country effects are absorbed by within-demeaning, year
// effects enter as dummies with the earliest year omitted.
FitResult fit_ols(const RegressionSpec& spec, const CountryYearPanel& panel);

// Two-stage least squares. The covariance is built from structural residuals
// y - X b with the actual endogenous columns.
FitResult fit_tsls(const RegressionSpec& spec, const CountryYearPanel& panel);

// Stage-1 fits, one per endogenous variable, each with instruments, exogenous
// regressors and fixed effects on the right-hand side.
std::vector<FitResult> first_stage(const RegressionSpec& spec, const CountryYearPanel& panel);

// Dispatches to fit_tsls for IV specs, fit_ols otherwise.
FitResult fit(const RegressionSpec& spec, const CountryYearPanel& panel);

// Inputs for the covariance estimators. `design` holds the regressors that
// enter the score (fitted endogenous columns for 2SLS), after fixed-effect
// absorption and without weighting.
struct VcovInputs {
  const Eigen::MatrixXd& design;
  const Eigen::VectorXd& residuals;
  const Eigen::VectorXd& weights;
  // (X' W X)^{-1}
  const Eigen::MatrixXd& bread;
  double n_observations;
  double k_parameters;
  std::span<const int> clusters;  // only read for cluster covariance
  int n_clusters = 0;
};

Eigen::MatrixXd compute_vcov(const VcovInputs& in, const VcovKind& kind);

// The estimation sample after transforms, filtering and listwise deletion.
// Exposed for the diagnostics module.
struct EstimationFrame {
  std::vector<ObservationKey> keys;
  Eigen::VectorXd y;
  Eigen::VectorXd weights;
  Eigen::MatrixXd exogenous;  // user regressors, year dummies, intercept
  std::vector<std::string> exogenous_names;
  Eigen::MatrixXd endogenous;
  std::vector<std::string> endogenous_names;
  Eigen::MatrixXd instruments;
  std::vector<std::string> instrument_names;

  std::vector<int> unit;  // country index per row
  std::size_t n_units = 0;
  std::vector<int> cluster;
  std::size_t n_clusters = 0;
  std::size_t n_periods = 0;
  bool absorb_units = false;
  double n_observations = 0.0;
  std::vector<std::string> notes;

  std::size_t n_absorbed() const noexcept { return absorb_units ? n_units : 0; }
  // Weighted within-country demeaning when country effects are on; identity otherwise.
  Eigen::MatrixXd absorb(const Eigen::MatrixXd& m) const;
  // sqrt(sum w x^2) per column, before absorption.
  Eigen::VectorXd reference_norms(const Eigen::MatrixXd& m) const;
};

// Panel columns the spec reads that `panel` lacks, in first-use order.
std::vector<std::string> unresolved_variables(const RegressionSpec& spec,
                                              const CountryYearPanel& panel);

EstimationFrame build_frame(const RegressionSpec& spec, const CountryYearPanel& panel);

}  // namespace paneliv
