#pragma once

#include <optional>

#include <Eigen/Dense>

namespace paneliv::linalg {

inline constexpr double kRankTolerance = 1e-10;

// Least squares through an unpivoted Householder QR of the design.
//
// Column j is rank deficient when |R(j,j)|, the norm of what is left of the
// column after removing its projection on columns 0..j-1, falls below
// tolerance * reference_norms(j). The reference lets callers compare against
// a column's norm before fixed effects were swept out.
class LeastSquares {
 public:
  LeastSquares(const Eigen::MatrixXd& design, const Eigen::VectorXd& reference_norms,
               double tolerance = kRankTolerance);
  explicit LeastSquares(const Eigen::MatrixXd& design, double tolerance = kRankTolerance);

  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }

  // First column that fails the rank test, if any.
  std::optional<Eigen::Index> first_deficient_column() const noexcept { return deficient_; }
  // Coefficients of column j regressed on columns 0..j-1.
  Eigen::VectorXd leading_dependence(Eigen::Index j) const;

  // The remaining members require full rank.
  Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& y) const;
  // X (X'X)^{-1} X' y
  Eigen::MatrixXd project(const Eigen::MatrixXd& y) const;
  // (X'X)^{-1} = R^{-1} R^{-T}
  Eigen::MatrixXd inverse_gram() const;

 private:
  void require_full_rank() const;

  Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::optional<Eigen::Index> deficient_;
};

}  // namespace paneliv::linalg
