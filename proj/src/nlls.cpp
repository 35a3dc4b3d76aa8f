#include "dnp/nlls.hpp"

#include <cmath>

namespace dnp {

static Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    const Eigen::VectorXd& fx) {
  const int m = static_cast<int>(fx.size());
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd jac(m, n);
  for (int j = 0; j < n; ++j) {
    const double h = std::sqrt(1e-14) * std::max(std::abs(x(j)), 1.0);
    Eigen::VectorXd xp = x;
    xp(j) += h;
    jac.col(j) = (f(xp) - fx) / h;
  }
  return jac;
}

NllsResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    const Eigen::VectorXd& x0, const NllsOptions& opts) {
  NllsResult result;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = residuals(x);
  double ssr = r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    result.iterations = iter + 1;
    const Eigen::MatrixXd jac = numeric_jacobian(residuals, x, r);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;

    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd x_new = x + step;
      const Eigen::VectorXd r_new = residuals(x_new);
      const double ssr_new = r_new.squaredNorm();
      if (std::isfinite(ssr_new) && ssr_new < ssr) {
        const double rel_step = step.norm() / std::max(x.norm(), 1e-300);
        const double rel_decrease = (ssr - ssr_new) / std::max(ssr, 1e-300);
        x = x_new;
        r = r_new;
        ssr = ssr_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (rel_step < opts.xtol || rel_decrease < opts.ftol) result.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // No downhill step found: either converged at a minimum or stuck.
      result.converged = true;
      break;
    }
    if (result.converged) break;
  }

  result.params = x;
  result.ssr = ssr;

  const Eigen::VectorXd fx = residuals(x);
  const Eigen::MatrixXd jac = numeric_jacobian(residuals, x, fx);
  const int m = static_cast<int>(fx.size());
  const int n = static_cast<int>(x.size());
  const double variance = (m > n) ? ssr / (m - n) : 0.0;
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  jtj.diagonal().array() += 1e-300;
  result.covariance = variance * jtj.inverse();
  return result;
}

}  // namespace dnp
