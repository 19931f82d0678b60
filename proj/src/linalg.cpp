#include "paneliv/linalg.hpp"

#include <cmath>

#include "paneliv/error.hpp"

namespace paneliv::linalg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LeastSquares::LeastSquares(const MatrixXd& design, const VectorXd& reference_norms,
                           double tolerance)
    : qr_(design), rows_(design.rows()), cols_(design.cols()) {
  if (reference_norms.size() != cols_) {
    throw EstimationError("reference norm count does not match the design");
  }
  const auto& r = qr_.matrixQR();
  const Index diag = std::min(rows_, cols_);
  for (Index j = 0; j < cols_; ++j) {
    const double remainder = j < diag ? std::abs(r(j, j)) : 0.0;
    const double ref = reference_norms(j);
    if (!(ref > 0.0) || remainder < tolerance * ref) {
      deficient_ = j;
      break;
    }
  }
}

LeastSquares::LeastSquares(const MatrixXd& design, double tolerance)
    : LeastSquares(design, design.colwise().norm().transpose(), tolerance) {}

VectorXd LeastSquares::leading_dependence(Index j) const {
  if (j == 0) return VectorXd();
  const auto& r = qr_.matrixQR();
  return r.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(r.col(j).head(j));
}

void LeastSquares::require_full_rank() const {
  if (deficient_) throw EstimationError("least squares on a rank-deficient design");
}

VectorXd LeastSquares::solve(const VectorXd& y) const {
  require_full_rank();
  return qr_.solve(y);
}

MatrixXd LeastSquares::solve(const MatrixXd& y) const {
  require_full_rank();
  return qr_.solve(y);
}

MatrixXd LeastSquares::project(const MatrixXd& y) const {
  require_full_rank();
  MatrixXd qty = qr_.householderQ().transpose() * y;
  qty.bottomRows(rows_ - cols_).setZero();
  return qr_.householderQ() * qty;
}

MatrixXd LeastSquares::inverse_gram() const {
  require_full_rank();
  MatrixXd r = qr_.matrixQR().topLeftCorner(cols_, cols_).triangularView<Eigen::Upper>();
  MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(cols_, cols_));
  return r_inv * r_inv.transpose();
}

}  // namespace paneliv::linalg
