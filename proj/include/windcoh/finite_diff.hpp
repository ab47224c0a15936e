#pragma once

#include <Eigen/Dense>

#include <functional>

namespace windcoh {

// Central-difference Jacobian of f about x0. Step is absolute per component
// (scaled by max(1, |x_i|)). Used throughout the tests to pin the analytic
// Jacobians to the nonlinear equations they linearize.
inline Eigen::MatrixXd central_difference_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double step = 1e-6) {
  const Eigen::VectorXd f0 = f(x0);
  Eigen::MatrixXd jac(f0.size(), x0.size());
  for (Eigen::Index j = 0; j < x0.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x0[j]));
    Eigen::VectorXd xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

// Largest relative entry error between an analytic Jacobian and its
// finite-difference counterpart; denominators are floored to avoid blowing
// up on exact zeros.
inline double max_relative_error(const Eigen::MatrixXd& analytic,
                                 const Eigen::MatrixXd& numeric,
                                 double floor_scale = 1e-6) {
  const double scale =
      std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1.0});
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double denom =
          std::max(std::abs(numeric(i, j)), floor_scale * scale);
      worst = std::max(worst, std::abs(analytic(i, j) - numeric(i, j)) / denom);
    }
  return worst;
}

}  // namespace windcoh
