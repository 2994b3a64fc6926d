// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace agwire {

/// Residuals r(p) and, when `jacobian` is non-null, dr/dp (rows = residuals).
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                       Eigen::MatrixXd* jacobian)>;

struct LeastSquaresProblem {
  ResidualFunction residual;
  Eigen::VectorXd lower;  ///< empty means unbounded
  Eigen::VectorXd upper;  ///< empty means unbounded
};

struct LeastSquaresOptions {
  int max_iterations = 300;
  double relative_cost_tolerance = 1e-14;
  double relative_step_tolerance = 1e-12;
  double initial_damping = 1e-3;
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  double cost = 0.0;  ///< 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
  /// s^2 (J^T J)^-1 at the solution, s^2 = |r|^2 / (m - n).
  Eigen::MatrixXd covariance;
  std::vector<double> cost_trace;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling and projection onto box bounds.
/// Deterministic: no randomisation anywhere.
LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                       Eigen::VectorXd initial,
                                       const LeastSquaresOptions& options = {});

}  // namespace agwire
