#include "paneliv/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "paneliv/csv.hpp"
#include "paneliv/error.hpp"
#include "paneliv/linalg.hpp"

namespace paneliv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Spec validation

void VcovKind::validate() const {
  if (type == Type::cluster && cluster_variable.empty()) {
    throw SpecError("cluster covariance requires a cluster variable");
  }
}

std::string VcovKind::describe() const {
  switch (type) {
    case Type::classical: return "classical";
    case Type::robust_hc1: return "heteroskedasticity-robust (HC1)";
    case Type::cluster: return fmt::format("cluster-robust by {} (CR1)", cluster_variable);
  }
  return {};
}

void RegressionSpec::validate() const {
  if (dependent.empty()) throw SpecError("spec has no dependent variable");
  if (endogenous.empty() != instruments.empty()) {
    throw SpecError("instruments must be given exactly when endogenous variables are");
  }
  if (instruments.size() < endogenous.size()) {
    throw SpecError(fmt::format("order condition fails: {} instrument(s) for {} endogenous variable(s)",
                                instruments.size(), endogenous.size()));
  }
  std::set<std::string> seen;
  for (const auto* list : {&exogenous, &endogenous, &instruments}) {
    for (const auto& name : *list) {
      validate_expression(name);
      if (name == dependent) {
        throw SpecError(fmt::format("dependent variable '{}' also appears as a regressor", name));
      }
      if (!seen.insert(name).second) {
        throw SpecError(fmt::format("variable '{}' is listed more than once", name));
      }
    }
  }
  validate_expression(dependent);
  if (!weight.empty()) validate_expression(weight);
  vcov.validate();
  sample.validate();
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    transforms[i].validate();
    if (transforms[i].collapses_periods() && i + 1 != transforms.size()) {
      throw SpecError(fmt::format("{} must be the last transform step", transforms[i].describe()));
    }
  }
}

std::vector<VariableRequest> RegressionSpec::requests() const {
  std::vector<VariableRequest> out;
  out.push_back({dependent, VariableRole::regressor});
  for (const auto& v : endogenous) out.push_back({v, VariableRole::regressor});
  for (const auto& v : exogenous) out.push_back({v, VariableRole::regressor});
  for (const auto& v : instruments) out.push_back({v, VariableRole::instrument});
  if (!weight.empty()) out.push_back({weight, VariableRole::weight});
  if (vcov.type == VcovKind::Type::cluster && vcov.cluster_variable != "country") {
    out.push_back({vcov.cluster_variable, VariableRole::weight});
  }
  return out;
}

// ---------------------------------------------------------------------------
// FitResult

bool FitResult::has(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t FitResult::index_of(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SpecError(fmt::format("fit has no coefficient '{}'", name));
  return static_cast<std::size_t>(it - names.begin());
}

double FitResult::coefficient(std::string_view name) const { return coefficients(index_of(name)); }
double FitResult::standard_error(std::string_view name) const {
  return standard_errors(index_of(name));
}
double FitResult::t_statistic(std::string_view name) const { return t_statistics(index_of(name)); }
double FitResult::p_value(std::string_view name) const { return p_values(index_of(name)); }

std::string to_record(const FitResult& fit) {
  std::ostringstream out;
  auto put = [&](std::string_view key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  auto real = [](double v) { return csv::format_real(v); };
  put("estimator", fit.estimator);
  put("vcov", fit.vcov.describe());
  put("weight", fit.weight.empty() ? "none" : fit.weight);
  put("n_observations", real(fit.n_observations));
  put("n_rows", std::to_string(fit.n_rows));
  put("n_countries", std::to_string(fit.n_countries));
  put("n_clusters", std::to_string(fit.n_clusters));
  put("k_parameters", std::to_string(fit.k_parameters));
  put("dof_residual", real(fit.dof_residual));
  put("r_squared", real(fit.r_squared));
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto& n = fit.names[i];
    put("coef." + n, real(fit.coefficients(i)));
    put("se." + n, real(fit.standard_errors(i)));
    put("t." + n, real(fit.t_statistics(i)));
    put("p." + n, real(fit.p_values(i)));
  }
  for (const auto& d : fit.dropped) put("dropped", d);
  return out.str();
}

// ---------------------------------------------------------------------------
// Covariance

MatrixXd compute_vcov(const VcovInputs& in, const VcovKind& kind) {
  kind.validate();
  const double n = in.n_observations;
  const double k = in.k_parameters;
  if (!(n - k > 0.0)) throw EstimationError("zero residual degrees of freedom");
  const Index rows = in.design.rows();
  MatrixXd v;
  switch (kind.type) {
    case VcovKind::Type::classical: {
      const double s2 = (in.weights.array() * in.residuals.array().square()).sum() / (n - k);
      v = s2 * in.bread;
      break;
    }
    case VcovKind::Type::robust_hc1: {
      VectorXd scale = in.weights.array() * in.residuals.array().square();
      MatrixXd meat = in.design.transpose() * scale.asDiagonal() * in.design;
      v = in.bread * meat * in.bread * (n / (n - k));
      break;
    }
    case VcovKind::Type::cluster: {
      const int g = in.n_clusters;
      if (g < 2) throw EstimationError("cluster covariance needs at least two clusters");
      if (static_cast<Index>(in.clusters.size()) != rows) {
        throw EstimationError("cluster ids do not match the design rows");
      }
      MatrixXd scores = MatrixXd::Zero(g, in.design.cols());
      for (Index i = 0; i < rows; ++i) {
        scores.row(in.clusters[i]) += in.weights(i) * in.residuals(i) * in.design.row(i);
      }
      MatrixXd meat = scores.transpose() * scores;
      const double factor = (static_cast<double>(g) / (g - 1)) * ((n - 1.0) / (n - k));
      v = in.bread * meat * in.bread * factor;
      break;
    }
  }
  return 0.5 * (v + v.transpose());
}

// ---------------------------------------------------------------------------
// Frame construction

MatrixXd EstimationFrame::absorb(const MatrixXd& m) const {
  if (!absorb_units) return m;
  MatrixXd sums = MatrixXd::Zero(static_cast<Index>(n_units), m.cols());
  VectorXd wsum = VectorXd::Zero(static_cast<Index>(n_units));
  for (Index i = 0; i < m.rows(); ++i) {
    sums.row(unit[i]) += weights(i) * m.row(i);
    wsum(unit[i]) += weights(i);
  }
  MatrixXd out = m;
  for (Index i = 0; i < m.rows(); ++i) out.row(i) -= sums.row(unit[i]) / wsum(unit[i]);
  return out;
}

VectorXd EstimationFrame::reference_norms(const MatrixXd& m) const {
  return (weights.asDiagonal() * m.array().square().matrix()).colwise().sum().transpose().cwiseSqrt();
}

std::vector<std::string> unresolved_variables(const RegressionSpec& spec,
                                              const CountryYearPanel& panel) {
  std::set<std::string> known;
  for (const auto& v : panel.variables()) known.insert(v);
  std::vector<std::string> missing;
  auto need = [&](const std::string& expression) {
    if (known.count(expression)) return;
    for (const auto& name : referenced_variables(expression)) {
      if (!known.count(name) && std::find(missing.begin(), missing.end(), name) == missing.end()) {
        missing.push_back(name);
      }
    }
  };
  for (const auto& t : spec.transforms) {
    if (t.kind == TransformKind::Kind::lag) {
      need(t.base_variable);
      known.insert(lag_name(expression_column_name(t.base_variable), t.lag_periods));
    } else if (t.kind == TransformKind::Kind::year_interaction) {
      need(t.base_variable);
    }
  }
  for (const auto& req : spec.requests()) need(req.expression);
  return missing;
}

namespace {

void check_resolvable(const RegressionSpec& spec, const CountryYearPanel& panel) {
  const auto missing = unresolved_variables(spec, panel);
  if (!missing.empty()) {
    throw SpecError(fmt::format("unresolved variable(s): {}", fmt::join(missing, ", ")));
  }
}

MatrixXd gather(const CountryYearPanel& panel, const std::vector<std::string>& names,
                const std::vector<std::size_t>& rows) {
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = panel.column(names[j]);
    for (std::size_t i = 0; i < rows.size(); ++i) m(i, j) = col[rows[i]];
  }
  return m;
}

}  // namespace

EstimationFrame build_frame(const RegressionSpec& spec, const CountryYearPanel& panel) {
  spec.validate();
  auto sample = filter_sample(panel, spec.sample);
  check_resolvable(spec, sample);
  auto prepared = prepare_variables(sample, spec.transforms, spec.requests());
  const auto& data = prepared.panel;

  EstimationFrame frame;
  frame.notes = prepared.notes;
  std::vector<std::string> exog = spec.exogenous;
  exog.insert(exog.end(), prepared.generated_exogenous.begin(), prepared.generated_exogenous.end());

  const bool by_column_cluster =
      spec.vcov.type == VcovKind::Type::cluster && spec.vcov.cluster_variable != "country";
  std::vector<std::string> needed{spec.dependent};
  needed.insert(needed.end(), spec.endogenous.begin(), spec.endogenous.end());
  needed.insert(needed.end(), exog.begin(), exog.end());
  needed.insert(needed.end(), spec.instruments.begin(), spec.instruments.end());
  if (!spec.weight.empty()) needed.push_back(spec.weight);
  if (by_column_cluster) needed.push_back(spec.vcov.cluster_variable);

  std::vector<std::span<const double>> cols;
  for (const auto& n : needed) cols.push_back(data.column(n));
  std::vector<std::size_t> rows;
  const auto keys = data.keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    bool complete = std::all_of(cols.begin(), cols.end(), [i](auto c) { return !is_missing(c[i]); });
    if (complete) rows.push_back(i);
  }
  if (rows.size() < keys.size()) {
    frame.notes.push_back(fmt::format("{} of {} observation(s) dropped for missing values",
                                      keys.size() - rows.size(), keys.size()));
  }
  if (rows.empty()) throw DataError("estimation sample is empty after dropping missing values");

  const auto n = static_cast<Index>(rows.size());
  for (auto r : rows) frame.keys.push_back(keys[r]);
  frame.y = gather(data, {spec.dependent}, rows).col(0);
  frame.weights = spec.weight.empty() ? VectorXd::Ones(n) : VectorXd(gather(data, {spec.weight}, rows).col(0));
  for (Index i = 0; i < n; ++i) {
    if (!(frame.weights(i) > 0.0)) {
      throw DataError(fmt::format("nonpositive weight {} at ({},{})", frame.weights(i),
                                  frame.keys[i].country, frame.keys[i].year));
    }
  }
  frame.n_observations = frame.weights.sum();

  // Country and year indices.
  std::map<std::string, int> unit_ids;
  std::set<int> years;
  for (const auto& k : frame.keys) {
    unit_ids.emplace(k.country, 0);
    years.insert(k.year);
  }
  int next = 0;
  for (auto& [_, id] : unit_ids) id = next++;
  frame.n_units = unit_ids.size();
  frame.n_periods = years.size();
  for (const auto& k : frame.keys) frame.unit.push_back(unit_ids.at(k.country));
  frame.absorb_units = spec.country_effects;

  MatrixXd user_exog = gather(data, exog, rows);
  std::vector<std::string> exog_names = exog;
  std::vector<int> dummy_years;
  if (spec.year_effects) dummy_years.assign(std::next(years.begin()), years.end());
  const bool intercept = spec.include_intercept && !spec.country_effects;
  MatrixXd full(n, user_exog.cols() + static_cast<Index>(dummy_years.size()) + (intercept ? 1 : 0));
  full.leftCols(user_exog.cols()) = user_exog;
  Index c = user_exog.cols();
  for (int y : dummy_years) {
    for (Index i = 0; i < n; ++i) full(i, c) = frame.keys[i].year == y ? 1.0 : 0.0;
    exog_names.push_back(fmt::format("year_{}", y));
    ++c;
  }
  if (intercept) {
    full.col(c).setOnes();
    exog_names.push_back("_cons");
  }
  frame.exogenous = std::move(full);
  frame.exogenous_names = std::move(exog_names);
  frame.endogenous = gather(data, spec.endogenous, rows);
  frame.endogenous_names = spec.endogenous;
  frame.instruments = gather(data, spec.instruments, rows);
  frame.instrument_names = spec.instruments;

  if (spec.vcov.type == VcovKind::Type::cluster) {
    if (by_column_cluster) {
      std::map<double, int> ids;
      const auto col = data.column(spec.vcov.cluster_variable);
      for (auto r : rows) ids.emplace(col[r], 0);
      int g = 0;
      for (auto& [_, id] : ids) id = g++;
      for (auto r : rows) frame.cluster.push_back(ids.at(col[r]));
      frame.n_clusters = ids.size();
    } else {
      frame.cluster = frame.unit;
      frame.n_clusters = frame.n_units;
    }
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Estimation core

namespace {

double two_sided_p(double t, double dof) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

[[noreturn]] void throw_collinear(const linalg::LeastSquares& ls, Index j,
                                  const std::vector<std::string>& names, bool absorbed) {
  std::vector<std::string> set;
  VectorXd dep = ls.leading_dependence(j);
  const double scale = dep.size() ? dep.cwiseAbs().maxCoeff() : 0.0;
  for (Index i = 0; i < dep.size(); ++i) {
    if (std::abs(dep(i)) > 1e-8 * std::max(scale, 1.0)) set.push_back(names[i]);
  }
  set.push_back(names[j]);
  std::string where = set.size() == 1
                          ? (absorbed ? " (no variation left after country fixed effects)"
                                      : " (column is zero)")
                          : "";
  throw RankError(fmt::format("rank-deficient design: collinear columns {{{}}}{}",
                              fmt::join(set, ", "), where),
                  set);
}

struct Solved {
  linalg::LeastSquares ls;
  std::vector<Index> kept;
};

// Factorizes sqrt(w) * absorbed design, dropping or rejecting collinear columns.
Solved factorize(const EstimationFrame& frame, const MatrixXd& absorbed, const VectorXd& reference,
                 const std::vector<std::string>& names, bool drop, std::vector<std::string>* dropped) {
  const VectorXd sw = frame.weights.cwiseSqrt();
  std::vector<Index> kept(absorbed.cols());
  for (Index j = 0; j < absorbed.cols(); ++j) kept[j] = j;
  while (true) {
    MatrixXd x(absorbed.rows(), static_cast<Index>(kept.size()));
    VectorXd ref(static_cast<Index>(kept.size()));
    std::vector<std::string> kept_names;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      x.col(k) = sw.asDiagonal() * absorbed.col(kept[k]);
      ref(k) = reference(kept[k]);
      kept_names.push_back(names[kept[k]]);
    }
    linalg::LeastSquares ls(x, ref);
    auto bad = ls.first_deficient_column();
    if (!bad) return {std::move(ls), std::move(kept)};
    if (!drop) throw_collinear(ls, *bad, kept_names, frame.absorb_units);
    if (dropped) dropped->push_back(kept_names[*bad]);
    kept.erase(kept.begin() + *bad);
  }
}

MatrixXd select_cols(const MatrixXd& m, const std::vector<Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = m.col(cols[k]);
  return out;
}

std::vector<std::string> select_names(const std::vector<std::string>& names,
                                      const std::vector<Index>& cols) {
  std::vector<std::string> out;
  for (auto c : cols) out.push_back(names[c]);
  return out;
}

double total_sum_of_squares(const EstimationFrame& frame, const VectorXd& y, bool centered) {
  const VectorXd& w = frame.weights;
  if (!centered) return (w.array() * y.array().square()).sum();
  const double mean = w.dot(y) / w.sum();
  return (w.array() * (y.array() - mean).square()).sum();
}

void finish(FitResult& fit, const EstimationFrame& frame, const VcovKind& vcov) {
  fit.n_observations = frame.n_observations;
  fit.n_rows = frame.keys.size();
  fit.n_countries = frame.n_units;
  fit.n_clusters = vcov.type == VcovKind::Type::cluster ? frame.n_clusters : 0;
  fit.n_periods = frame.n_periods;
  fit.n_absorbed = frame.n_absorbed();
  fit.k_parameters = fit.names.size() + fit.n_absorbed;
  fit.dof_residual = fit.n_observations - static_cast<double>(fit.k_parameters);
  fit.dof_inference = vcov.type == VcovKind::Type::cluster
                          ? static_cast<double>(frame.n_clusters) - 1.0
                          : fit.dof_residual;
  fit.vcov = vcov;
  fit.row_keys = frame.keys;
  fit.notes.insert(fit.notes.end(), frame.notes.begin(), frame.notes.end());

  const Index k = fit.coefficients.size();
  fit.standard_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.t_statistics.resize(k);
  fit.p_values.resize(k);
  for (Index j = 0; j < k; ++j) {
    const double b = fit.coefficients(j);
    const double se = fit.standard_errors(j);
    double t;
    if (se > 0.0) t = b / se;
    else t = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
    fit.t_statistics(j) = t;
    fit.p_values(j) = two_sided_p(t, fit.dof_inference);
  }
}

void check_dof(const EstimationFrame& frame, std::size_t p) {
  const double k = static_cast<double>(p + frame.n_absorbed());
  if (!(frame.n_observations - k > 0.0)) {
    throw EstimationError(fmt::format(
        "zero residual degrees of freedom: {} observation(s) for {} parameter(s)",
        frame.n_observations, p + frame.n_absorbed()));
  }
}

FitResult ols_core(const EstimationFrame& frame, const MatrixXd& x,
                   const std::vector<std::string>& names, const VectorXd& y, const VcovKind& vcov,
                   bool drop, bool centered_r2) {
  FitResult fit;
  fit.estimator = "ols";
  const MatrixXd xa_all = frame.absorb(x);
  const VectorXd ya = frame.absorb(y);
  auto solved = factorize(frame, xa_all, frame.reference_norms(x), names, drop, &fit.dropped);
  const MatrixXd xa = select_cols(xa_all, solved.kept);
  fit.names = select_names(names, solved.kept);
  check_dof(frame, fit.names.size());

  const VectorXd sw = frame.weights.cwiseSqrt();
  fit.coefficients = solved.ls.solve(VectorXd(sw.asDiagonal() * ya));
  fit.residuals = ya - xa * fit.coefficients;
  const MatrixXd bread = solved.ls.inverse_gram();
  const double k = static_cast<double>(fit.names.size() + frame.n_absorbed());
  fit.covariance = compute_vcov({xa, fit.residuals, frame.weights, bread, frame.n_observations, k,
                                 frame.cluster, static_cast<int>(frame.n_clusters)},
                                vcov);
  fit.rss = (frame.weights.array() * fit.residuals.array().square()).sum();
  fit.tss = total_sum_of_squares(frame, y, centered_r2);
  fit.r_squared = fit.tss > 0.0 ? 1.0 - fit.rss / fit.tss : 0.0;
  finish(fit, frame, vcov);
  return fit;
}

bool centered(const RegressionSpec& spec) { return spec.include_intercept || spec.country_effects; }

void check_instrument_variation(const EstimationFrame& frame) {
  const MatrixXd za = frame.absorb(frame.instruments);
  const VectorXd zref = frame.reference_norms(frame.instruments);
  const MatrixXd xa = frame.absorb(frame.exogenous);
  const VectorXd sw = frame.weights.cwiseSqrt();
  MatrixXd remainder = sw.asDiagonal() * za;
  if (xa.cols() > 0) {
    linalg::LeastSquares ls(sw.asDiagonal() * xa, frame.reference_norms(frame.exogenous));
    if (!ls.first_deficient_column()) remainder -= ls.project(remainder);
  }
  for (Index j = 0; j < za.cols(); ++j) {
    if (!(zref(j) > 0.0) || remainder.col(j).norm() < linalg::kRankTolerance * zref(j)) {
      throw EstimationError(fmt::format("instrument '{}' has no within variation",
                                        frame.instrument_names[j]));
    }
  }
}

struct IvDesign {
  MatrixXd z;  // instruments then exogenous
  std::vector<std::string> z_names;
};

IvDesign iv_design(const EstimationFrame& frame) {
  IvDesign d;
  d.z.resize(frame.keys.size(), frame.instruments.cols() + frame.exogenous.cols());
  d.z << frame.instruments, frame.exogenous;
  d.z_names = frame.instrument_names;
  d.z_names.insert(d.z_names.end(), frame.exogenous_names.begin(), frame.exogenous_names.end());
  return d;
}

std::vector<FitResult> first_stages_on(const EstimationFrame& frame, const RegressionSpec& spec) {
  check_instrument_variation(frame);
  const auto d = iv_design(frame);
  std::vector<FitResult> out;
  for (Index e = 0; e < frame.endogenous.cols(); ++e) {
    auto fs = ols_core(frame, d.z, d.z_names, frame.endogenous.col(e), spec.vcov,
                       spec.drop_collinear, centered(spec));
    fs.estimator = "ols";
    fs.notes.insert(fs.notes.begin(), fmt::format("first stage for {}", frame.endogenous_names[e]));
    fs.weight = spec.weight;
    out.push_back(std::move(fs));
  }
  return out;
}

}  // namespace

FitResult fit_ols(const RegressionSpec& spec, const CountryYearPanel& panel) {
  if (spec.is_iv()) throw SpecError("fit_ols: spec lists endogenous variables; use fit_tsls");
  auto frame = build_frame(spec, panel);
  auto fit = ols_core(frame, frame.exogenous, frame.exogenous_names, frame.y, spec.vcov,
                      spec.drop_collinear, centered(spec));
  fit.weight = spec.weight;
  return fit;
}

std::vector<FitResult> first_stage(const RegressionSpec& spec, const CountryYearPanel& panel) {
  if (!spec.is_iv()) throw SpecError("first_stage: spec has no endogenous variables");
  auto frame = build_frame(spec, panel);
  return first_stages_on(frame, spec);
}

FitResult fit_tsls(const RegressionSpec& spec, const CountryYearPanel& panel) {
  if (!spec.is_iv()) throw SpecError("fit_tsls: spec has no endogenous variables");
  auto frame = build_frame(spec, panel);

  FitResult fit;
  fit.estimator = "tsls";
  if (spec.drop_collinear) {
    // Resolve exogenous collinearity once so both stages share the column set.
    MatrixXd xfull(frame.keys.size(), frame.endogenous.cols() + frame.exogenous.cols());
    xfull << frame.endogenous, frame.exogenous;
    std::vector<std::string> names = frame.endogenous_names;
    names.insert(names.end(), frame.exogenous_names.begin(), frame.exogenous_names.end());
    std::vector<std::string> dropped;
    auto solved = factorize(frame, frame.absorb(xfull), frame.reference_norms(xfull), names, true, &dropped);
    for (const auto& d : dropped) {
      auto it = std::find(frame.exogenous_names.begin(), frame.exogenous_names.end(), d);
      if (it == frame.exogenous_names.end()) {
        throw RankError(fmt::format("endogenous variable '{}' is collinear with the exogenous set", d), {d});
      }
      const auto j = static_cast<Index>(it - frame.exogenous_names.begin());
      MatrixXd reduced(frame.exogenous.rows(), frame.exogenous.cols() - 1);
      reduced << frame.exogenous.leftCols(j), frame.exogenous.rightCols(frame.exogenous.cols() - j - 1);
      frame.exogenous = std::move(reduced);
      frame.exogenous_names.erase(it);
      fit.dropped.push_back(d);
    }
  }

  fit.first_stages = first_stages_on(frame, spec);

  const auto d = iv_design(frame);
  const VectorXd sw = frame.weights.cwiseSqrt();
  const MatrixXd za = frame.absorb(d.z);
  auto zsolved = factorize(frame, za, frame.reference_norms(d.z), d.z_names, false, nullptr);

  const MatrixXd endog_a = frame.absorb(frame.endogenous);
  const MatrixXd exog_a = frame.absorb(frame.exogenous);
  MatrixXd fitted_w = zsolved.ls.project(MatrixXd(sw.asDiagonal() * endog_a));
  MatrixXd fitted = sw.cwiseInverse().asDiagonal() * fitted_w;

  const Index n = static_cast<Index>(frame.keys.size());
  const Index p = endog_a.cols() + exog_a.cols();
  MatrixXd xhat(n, p), xact(n, p), xraw(n, p);
  xhat << fitted, exog_a;
  xact << endog_a, exog_a;
  xraw << frame.endogenous, frame.exogenous;
  fit.names = frame.endogenous_names;
  fit.names.insert(fit.names.end(), frame.exogenous_names.begin(), frame.exogenous_names.end());

  auto solved = factorize(frame, xhat, frame.reference_norms(xraw), fit.names, false, nullptr);
  check_dof(frame, fit.names.size());
  const VectorXd ya = frame.absorb(frame.y);
  fit.coefficients = solved.ls.solve(VectorXd(sw.asDiagonal() * ya));
  fit.residuals = ya - xact * fit.coefficients;
  const MatrixXd bread = solved.ls.inverse_gram();
  const double k = static_cast<double>(p + frame.n_absorbed());
  fit.covariance = compute_vcov({xhat, fit.residuals, frame.weights, bread, frame.n_observations, k,
                                 frame.cluster, static_cast<int>(frame.n_clusters)},
                                spec.vcov);
  fit.rss = (frame.weights.array() * fit.residuals.array().square()).sum();
  fit.tss = total_sum_of_squares(frame, frame.y, centered(spec));
  fit.r_squared = fit.tss > 0.0 ? 1.0 - fit.rss / fit.tss : 0.0;
  fit.weight = spec.weight;
  finish(fit, frame, spec.vcov);
  return fit;
}

FitResult fit(const RegressionSpec& spec, const CountryYearPanel& panel) {
  return spec.is_iv() ? fit_tsls(spec, panel) : fit_ols(spec, panel);
}

}  // namespace paneliv
