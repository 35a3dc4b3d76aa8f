#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dnp {

// Macroscopic build-up: dp/dt = alpha (1 - p) - gamma p, p(0) = 0, giving
// p(t) = [alpha/(alpha+gamma)] (1 - e^{-(alpha+gamma) t}). Rates in 1/min.
struct BuildupParams {
  double alpha = 0.0;
  double gamma = 0.0;
};

struct BuildupFit {
  double gamma_tilde = 0.0;  // 1/min
  double p_max = 0.0;        // same units as the samples
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
};

std::vector<double> buildup_curve(const BuildupParams& params, const std::vector<double>& t_min);

// Nonlinear least squares of p_max (1 - e^{-gamma_tilde t}).
BuildupFit fit_buildup(const std::vector<double>& t_min, const std::vector<double>& signal);

struct AbsolutePolarization {
  double fraction = 0.0;  // alpha / gamma_tilde
  double err = 0.0;
};

// alpha = gamma_tilde - gamma; returns alpha/gamma_tilde with first-order
// error propagation from the fit covariance and the gamma uncertainty.
AbsolutePolarization absolute_polarization(const BuildupFit& fit, double gamma,
                                           double gamma_err = 0.0);

struct PairedPolarization {
  double fraction = 0.0;  // mean of the two routes
  double err = 0.0;       // half their spread
  double own = 0.0;       // direct estimate from this curve's fit
  double cross = 0.0;     // other curve's estimate scaled by the amplitude ratio
};

// Combines the curve's own absolute estimate with the estimate anchored on
// a second curve measured in the same arbitrary units (their fitted
// amplitudes fix the relative scale).
PairedPolarization absolute_polarization_paired(const BuildupFit& own, const BuildupFit& other,
                                                double gamma);

// t = -ln(1 - level/p_max) / gamma_tilde.
double time_to_threshold(const BuildupFit& fit, double level);

}  // namespace dnp
