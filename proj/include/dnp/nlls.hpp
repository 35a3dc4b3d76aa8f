#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dnp {

struct NllsOptions {
  int max_iter = 500;
  double xtol = 1e-12;   // relative step tolerance
  double ftol = 1e-14;   // relative SSR decrease tolerance
};

struct NllsResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // ssr/(m-n) * (J^T J)^-1 at the solution
  double ssr = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt with a forward-difference Jacobian. The residual
// function maps parameters to the residual vector (model - data).
NllsResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
                               const Eigen::VectorXd& x0, const NllsOptions& opts);

}  // namespace dnp
