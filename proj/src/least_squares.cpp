// SPDX-License-Identifier: Apache-2.0
#include "agwire/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace agwire {

namespace {

void project(Eigen::VectorXd& p, const LeastSquaresProblem& problem) {
  if (problem.lower.size() == p.size()) p = p.cwiseMax(problem.lower);
  if (problem.upper.size() == p.size()) p = p.cwiseMin(problem.upper);
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                       Eigen::VectorXd initial,
                                       const LeastSquaresOptions& options) {
  LeastSquaresResult result;
  Eigen::VectorXd p = std::move(initial);
  project(p, problem);

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  problem.residual(p, r, &J);
  if (!finite(r)) {
    result.params = p;
    result.cost = std::numeric_limits<double>::infinity();
    return result;
  }
  double cost = 0.5 * r.squaredNorm();
  result.cost_trace.push_back(cost);
  double lambda = options.initial_damping;
  const auto n = p.size();

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-30);

    // Parameters held at a bound by the gradient, or absent from the model at this point,
    // are frozen for the step.
    const double scale = JtJ.diagonal().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = problem.lower.size() == n && p(i) <= problem.lower(i) && g(i) > 0.0;
      const bool at_upper = problem.upper.size() == n && p(i) >= problem.upper(i) && g(i) < 0.0;
      if (at_lower || at_upper || JtJ(i, i) <= 1e-20 * scale) {
        JtJ.row(i).setZero();
        JtJ.col(i).setZero();
        JtJ(i, i) = 1.0;
        diag(i) = 1.0;
        g(i) = 0.0;
      }
    }

    bool accepted = false;
    bool tiny_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index i = 0; i < n; ++i) A(i, i) += lambda * diag(i);
      Eigen::VectorXd step = A.ldlt().solve(-g);
      Eigen::VectorXd trial = p + step;
      project(trial, problem);
      const Eigen::VectorXd actual_step = trial - p;
      if (actual_step.norm() <= options.relative_step_tolerance * (p.norm() + 1e-12)) {
        tiny_step = true;
        break;
      }
      Eigen::VectorXd r_trial;
      problem.residual(trial, r_trial, nullptr);
      const double trial_cost = finite(r_trial) ? 0.5 * r_trial.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
      if (trial_cost < cost) {
        const double improvement = (cost - trial_cost) / std::max(cost, 1e-300);
        p = trial;
        r = r_trial;
        cost = trial_cost;
        problem.residual(p, r, &J);
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        result.cost_trace.push_back(cost);
        if (improvement < options.relative_cost_tolerance) tiny_step = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) break;
    }
    if (tiny_step || cost == 0.0) {
      result.converged = true;
      break;
    }
    if (!accepted) {
      // Damping saturated without progress: we are at a (possibly bounded) minimum.
      result.converged = true;
      break;
    }
  }

  result.params = p;
  result.cost = cost;
  const auto m = r.size();
  const Eigen::MatrixXd JtJ = J.transpose() * J;
  const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
  const double s2 = 2.0 * cost / dof;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
  if (lu.isInvertible()) {
    result.covariance = s2 * lu.inverse();
  } else {
    result.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  }
  return result;
}

}  // namespace agwire
