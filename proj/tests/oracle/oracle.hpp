#pragma once

// Dense reference estimators for the test suite. They build explicit dummy
// columns and solve normal equations, sharing no code with the library's
// absorption and QR paths.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "paneliv/panel.hpp"

namespace oracle {

// Solves (X'X) b = X'y by full-pivot LU. Throws std::runtime_error when the
// normal matrix is singular.
Eigen::VectorXd oracle_dummy_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

enum class Vcov { classical, hc1, cr1 };

struct DenseFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd residuals;
  double rss = 0.0;
};

// Weighted OLS (w = frequency weights, N = sum w) with the chosen covariance.
// `clusters` holds one label per row for cr1.
DenseFit dense_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   Vcov vcov, const std::vector<int>& clusters = {});

// 2SLS with explicit projection: exog holds the included exogenous columns
// (dummies included), endog the instrumented ones. Coefficients are ordered
// [endog, exog]. Covariance uses structural residuals.
DenseFit dense_tsls(const Eigen::MatrixXd& exog, const Eigen::MatrixXd& endog,
                    const Eigen::MatrixXd& instruments, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& w, Vcov vcov, const std::vector<int>& clusters = {});

// Residuals of each column of m after projecting on x (normal equations).
Eigen::MatrixXd partial_out(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x);

// Min eigenvalue of S^{-1/2} X'Pz X S^{-1/2} / k2 computed with a plain
// symmetric eigen solver, where everything is already partialled.
double dense_cragg_donald(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double dof);

// Explicit dummy design for a panel: one column per country, one per grid
// year but the first, then the listed columns.
struct DummyDesign {
  Eigen::MatrixXd matrix;
  std::vector<int> country;  // row -> country index
  std::size_t n_dummies = 0;
};
DummyDesign dummy_design(const paneliv::CountryYearPanel& panel,
                         const std::vector<std::string>& columns, bool country_dummies,
                         bool year_dummies);

Eigen::MatrixXd columns_of(const paneliv::CountryYearPanel& panel,
                           const std::vector<std::string>& names);

struct RandomPanelOptions {
  int min_countries = 5, max_countries = 20;
  int min_years = 2, max_years = 7;
  int min_regressors = 1, max_regressors = 3;
  // Drop this share of rows at random (never below 2 residual dof).
  double drop_share = 0.0;
  double noise = 0.1;
  bool integer_weights = false;
  int max_weight = 50;
};

struct RandomPanel {
  paneliv::CountryYearPanel panel;
  std::vector<std::string> regressors;  // x1..xk; response is "y", weight "w"
  int n_countries = 0;
  int n_years = 0;
};

// y = sum b_j x_j + country effect + year effect + noise, with every true
// effect bounded away from zero.
RandomPanel random_panel(std::mt19937_64& rng, const RandomPanelOptions& opt = {});

bool close_rel(double a, double b, double tol);

}  // namespace oracle
