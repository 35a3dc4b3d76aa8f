#include "dnp/buildup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dnp/errors.hpp"
#include "dnp/nlls.hpp"

namespace dnp {

std::vector<double> buildup_curve(const BuildupParams& params, const std::vector<double>& t_min) {
  if (params.alpha < 0.0 || params.gamma < 0.0 || params.alpha + params.gamma <= 0.0)
    throw std::invalid_argument("buildup_curve: invalid rates");
  const double gt = params.alpha + params.gamma;
  const double p_max = params.alpha / gt;
  std::vector<double> p(t_min.size());
  for (size_t i = 0; i < p.size(); ++i) p[i] = p_max * (1.0 - std::exp(-gt * t_min[i]));
  return p;
}

BuildupFit fit_buildup(const std::vector<double>& t_min, const std::vector<double>& signal) {
  if (t_min.size() != signal.size() || t_min.size() < 3)
    throw std::invalid_argument("fit_buildup: need at least 3 samples");
  for (size_t i = 1; i < t_min.size(); ++i)
    if (t_min[i] <= t_min[i - 1]) throw std::invalid_argument("fit_buildup: times must increase");

  // Initial guesses: amplitude from the last sample, rate from the
  // log-linearized early part ln(1 - p/p_max) = -gamma_tilde t.
  double p_max0 = signal.back();
  if (p_max0 <= 0.0) p_max0 = *std::max_element(signal.begin(), signal.end());
  if (p_max0 <= 0.0) throw FitError("fit_buildup: signal has no positive samples");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < t_min.size(); ++i) {
    const double frac = signal[i] / (1.05 * p_max0);
    if (frac <= 0.0 || frac >= 1.0 || t_min[i] <= 0.0) continue;
    num += -std::log(1.0 - frac) * t_min[i];
    den += t_min[i] * t_min[i];
  }
  double gt0 = den > 0.0 ? num / den : 1.0 / t_min.back();
  if (!(gt0 > 0.0)) gt0 = 1.0 / t_min.back();

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(t_min.size());
    for (size_t i = 0; i < t_min.size(); ++i)
      r(i) = p(1) * (1.0 - std::exp(-p(0) * t_min[i])) - signal[i];
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << gt0, p_max0;
  const auto res = levenberg_marquardt(residuals, x0, {});
  if (!res.converged) throw FitError("fit_buildup: no convergence after 500 iterations");
  if (!(res.params(0) > 0.0) || !(res.params(1) > 0.0))
    throw FitError("fit_buildup: fit left the physical domain");

  BuildupFit fit;
  fit.gamma_tilde = res.params(0);
  fit.p_max = res.params(1);
  fit.covariance = res.covariance;
  return fit;
}

AbsolutePolarization absolute_polarization(const BuildupFit& fit, double gamma, double gamma_err) {
  if (fit.gamma_tilde <= gamma)
    throw FitError("absolute_polarization: gamma_tilde <= gamma leaves no polarization power");
  AbsolutePolarization out;
  out.fraction = (fit.gamma_tilde - gamma) / fit.gamma_tilde;
  const double d_gt = gamma / (fit.gamma_tilde * fit.gamma_tilde);
  const double d_g = -1.0 / fit.gamma_tilde;
  out.err = std::sqrt(d_gt * d_gt * fit.covariance(0, 0) + d_g * d_g * gamma_err * gamma_err);
  return out;
}

PairedPolarization absolute_polarization_paired(const BuildupFit& own, const BuildupFit& other,
                                                double gamma) {
  PairedPolarization out;
  out.own = absolute_polarization(own, gamma).fraction;
  out.cross = (own.p_max / other.p_max) * absolute_polarization(other, gamma).fraction;
  out.fraction = 0.5 * (out.own + out.cross);
  out.err = 0.5 * std::abs(out.own - out.cross);
  return out;
}

double time_to_threshold(const BuildupFit& fit, double level) {
  if (level >= fit.p_max)
    throw FitError("time_to_threshold: level is never reached (level >= p_max)");
  if (fit.gamma_tilde <= 0.0) throw FitError("time_to_threshold: invalid fit");
  return -std::log(1.0 - level / fit.p_max) / fit.gamma_tilde;
}

}  // namespace dnp
