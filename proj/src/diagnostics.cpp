#include "paneliv/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "paneliv/csv.hpp"
#include "paneliv/error.hpp"
#include "paneliv/linalg.hpp"
#include "paneliv/resources.hpp"

namespace paneliv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double cragg_donald_stat(const RegressionSpec& spec, const CountryYearPanel& panel) {
  if (spec.instruments.empty() || spec.endogenous.empty()) {
    throw SpecError("Cragg-Donald statistic needs endogenous variables and instruments");
  }
  const auto frame = build_frame(spec, panel);
  const VectorXd sw = frame.weights.cwiseSqrt();

  MatrixXd x = sw.asDiagonal() * frame.absorb(frame.endogenous);
  MatrixXd z = sw.asDiagonal() * frame.absorb(frame.instruments);
  if (frame.exogenous.cols() > 0) {
    linalg::LeastSquares exog(sw.asDiagonal() * frame.absorb(frame.exogenous),
                              frame.reference_norms(frame.exogenous));
    if (auto bad = exog.first_deficient_column()) {
      throw RankError(fmt::format("exogenous column '{}' is collinear",
                                  frame.exogenous_names[*bad]),
                      {frame.exogenous_names[*bad]});
    }
    x -= exog.project(x);
    z -= exog.project(z);
  }

  linalg::LeastSquares zls(z, frame.reference_norms(frame.instruments));
  if (auto bad = zls.first_deficient_column()) {
    throw EstimationError(fmt::format("instrument '{}' has no variation left after partialling",
                                      frame.instrument_names[*bad]));
  }
  const double k1 = static_cast<double>(frame.exogenous.cols() + frame.n_absorbed());
  const double k2 = static_cast<double>(frame.instruments.cols());
  const double dof = frame.n_observations - k1 - k2;
  if (!(dof > 0.0)) throw EstimationError("Cragg-Donald: no residual degrees of freedom");

  const MatrixXd projected = zls.project(x);
  const MatrixXd explained = x.transpose() * projected;
  const MatrixXd left = x - projected;
  const MatrixXd residual_cov = left.transpose() * left / dof;

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> eig(0.5 * (explained + explained.transpose()),
                                                         0.5 * (residual_cov + residual_cov.transpose()));
  if (eig.info() != Eigen::Success) {
    throw EstimationError("Cragg-Donald: eigenvalue computation failed");
  }
  return eig.eigenvalues().minCoeff() / k2;
}

// ---------------------------------------------------------------------------

std::string_view to_string(MaximalSize size) {
  switch (size) {
    case MaximalSize::p10: return "10%";
    case MaximalSize::p15: return "15%";
    case MaximalSize::p20: return "20%";
    case MaximalSize::p25: return "25%";
  }
  return "?";
}

MaximalSize parse_maximal_size(std::string_view text) {
  if (!text.empty() && text.back() == '%') text.remove_suffix(1);
  if (text == "10") return MaximalSize::p10;
  if (text == "15") return MaximalSize::p15;
  if (text == "20") return MaximalSize::p20;
  if (text == "25") return MaximalSize::p25;
  throw SpecError(fmt::format("maximal size must be 10, 15, 20 or 25 percent, got '{}'", text));
}

const StockYogoTable& StockYogoTable::builtin() {
  static const StockYogoTable table = [] {
    std::istringstream in{std::string(resources::get("stock_yogo.csv"))};
    return read_csv(in, "stock_yogo.csv");
  }();
  return table;
}

StockYogoTable StockYogoTable::read_csv(std::istream& in, std::string_view source) {
  auto table = csv::read(in, source);
  const auto e = table.column_index("n_endogenous", source);
  const auto k = table.column_index("n_instruments", source);
  const auto s = table.column_index("maximal_size", source);
  const auto v = table.column_index("critical_value", source);
  StockYogoTable out;
  for (const auto& row : table.rows) {
    auto where = fmt::format("{}:{}", source, row.line);
    const int ne = csv::parse_int(row.cells[e], where);
    const int nk = csv::parse_int(row.cells[k], where);
    const auto size = static_cast<int>(parse_maximal_size(row.cells[s]));
    const double value = csv::parse_real(row.cells[v], where);
    if (!out.cells_.emplace(std::tuple{ne, nk, size}, value).second) {
      throw DataError(fmt::format("{}: duplicate critical value cell", where));
    }
  }
  return out;
}

StockYogoTable StockYogoTable::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_csv(in, path.string());
}

std::optional<double> StockYogoTable::find(int n_endogenous, int n_instruments,
                                           MaximalSize size) const {
  auto it = cells_.find({n_endogenous, n_instruments, static_cast<int>(size)});
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

double StockYogoTable::critical(int n_endogenous, int n_instruments, MaximalSize size) const {
  if (n_endogenous < 1 || n_instruments < n_endogenous) {
    throw SpecError(fmt::format("no critical value for {} endogenous and {} instrument(s): "
                                "order condition fails",
                                n_endogenous, n_instruments));
  }
  if (auto v = find(n_endogenous, n_instruments, size)) return *v;
  throw Error(fmt::format("untabulated Stock-Yogo cell ({} endogenous, {} instruments, {})",
                          n_endogenous, n_instruments, to_string(size)));
}

double stock_yogo_critical(int n_endogenous, int n_instruments, MaximalSize size) {
  return StockYogoTable::builtin().critical(n_endogenous, n_instruments, size);
}

std::string significance_stars(double p_value) {
  if (!(p_value >= 0.0 && p_value <= 1.0)) {
    throw SpecError(fmt::format("p-value {} is outside [0, 1]", p_value));
  }
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.1) return "*";
  return "";
}

// ---------------------------------------------------------------------------

std::string_view to_string(WeakIvReport::Verdict verdict) {
  switch (verdict) {
    case WeakIvReport::Verdict::not_weak_at_10: return "not weak at 10% maximal size";
    case WeakIvReport::Verdict::not_weak_at_15: return "not weak at 15% maximal size";
    case WeakIvReport::Verdict::weak: return "weak";
    case WeakIvReport::Verdict::undetermined: return "undetermined (no tabulated critical value)";
  }
  return "?";
}

WeakIvReport::Verdict weak_iv_verdict(double cd, const std::map<MaximalSize, double>& cvs) {
  auto cv10 = cvs.find(MaximalSize::p10);
  auto cv15 = cvs.find(MaximalSize::p15);
  if (cv10 == cvs.end() && cv15 == cvs.end()) return WeakIvReport::Verdict::undetermined;
  if (cv10 != cvs.end() && cd > cv10->second) return WeakIvReport::Verdict::not_weak_at_10;
  if (cv15 != cvs.end() && cd > cv15->second) return WeakIvReport::Verdict::not_weak_at_15;
  return WeakIvReport::Verdict::weak;
}

WeakIvReport weak_iv_report(const RegressionSpec& spec, const CountryYearPanel& panel) {
  WeakIvReport r;
  r.cragg_donald_f = cragg_donald_stat(spec, panel);
  r.n_endogenous = static_cast<int>(spec.endogenous.size());
  r.n_instruments = static_cast<int>(spec.instruments.size());
  for (auto size : {MaximalSize::p10, MaximalSize::p15, MaximalSize::p20, MaximalSize::p25}) {
    if (auto v = StockYogoTable::builtin().find(r.n_endogenous, r.n_instruments, size)) {
      r.critical_values.emplace(size, *v);
    }
  }
  r.verdict = weak_iv_verdict(r.cragg_donald_f, r.critical_values);
  r.note = "Cragg-Donald F uses homoskedastic covariance";
  if (spec.vcov.type != VcovKind::Type::classical) {
    r.note += fmt::format(" (the fit itself reports {} standard errors)", spec.vcov.describe());
  }
  if (!spec.weight.empty()) r.note += "; computed on the frequency-weighted design, N = weight sum";
  return r;
}

}  // namespace paneliv
