#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace shb::detail {

struct LmOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-12;  // relative, on the scaled step
  double cost_tolerance = 1e-15;  // relative decrease of an accepted step
  double initial_damping = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton with Marquardt's diagonal scaling. `residual(p)`
/// returns r(p) and `jacobian(p)` dr/dp; the sum of r^2 is minimized.
template <class Residual, class Jacobian>
LmResult levenberg_marquardt(Residual&& residual, Jacobian&& jacobian, Eigen::VectorXd start,
                             const LmOptions& opt = {}) {
  LmResult res;
  res.params = std::move(start);
  res.residuals = residual(res.params);
  res.cost = res.residuals.squaredNorm();
  if (!std::isfinite(res.cost)) return res;

  double lambda = opt.initial_damping;
  double last_decrease = std::numeric_limits<double>::infinity();
  res.jacobian = jacobian(res.params);

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    const Eigen::MatrixXd& j = res.jacobian;
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd grad = j.transpose() * res.residuals;
    Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-300);

    if (res.cost == 0.0 || grad.cwiseAbs().maxCoeff() == 0.0) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * scale;
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd trial = res.params + step;
      const Eigen::VectorXd r = residual(trial);
      const double cost = r.squaredNorm();
      if (std::isfinite(cost) && cost < res.cost) {
        last_decrease = (res.cost - cost) / res.cost;
        const double step_size = (step.cwiseProduct(scale.cwiseSqrt())).norm();
        const double param_size = (res.params.cwiseProduct(scale.cwiseSqrt())).norm();
        res.params = trial;
        res.residuals = r;
        res.cost = cost;
        res.jacobian = jacobian(res.params);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (last_decrease < opt.cost_tolerance || step_size <= opt.step_tolerance * (param_size + opt.step_tolerance)) {
          res.converged = true;
          return res;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e20) {
          // No descent direction left: a minimum if the last steps were
          // already making negligible progress or Gauss-Newton predicts
          // none, a stall otherwise.
          Eigen::MatrixXd a = jtj;
          a.diagonal() += 1e-12 * scale;
          const double predicted = grad.dot(a.ldlt().solve(grad));
          res.converged = last_decrease < 1e-8 || predicted <= 1e-8 * res.cost;
          return res;
        }
      }
    }
  }
  return res;
}

} // namespace shb::detail
