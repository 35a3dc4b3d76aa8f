#include "dnp/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dnp/cavity.hpp"

namespace dnp {

std::vector<double> Pulse::detuning() const { return phase_to_detuning(phi_ext, dt); }

void Pulse::validate() const {
  if (dt <= 0.0) throw std::invalid_argument("pulse: dt must be positive");
  if (size() < 2) throw std::invalid_argument("pulse: need at least two samples");
  if (phi_ext.size() != omega_ext.size())
    throw std::invalid_argument("pulse: amplitude/phase length mismatch");
  const double amp_tol = 1e-9 * omega_max;
  for (int i = 0; i < size(); ++i) {
    if (!std::isfinite(omega_ext[i]) || !std::isfinite(phi_ext[i]))
      throw std::invalid_argument("pulse: non-finite sample at index " + std::to_string(i));
    if (omega_ext[i] < -amp_tol || omega_ext[i] > omega_max + amp_tol)
      throw std::invalid_argument("pulse: amplitude out of [0, omega_max] at index " +
                                  std::to_string(i));
    if (i > 0 && std::abs(phi_ext[i] - phi_ext[i - 1]) >= M_PI)
      throw std::invalid_argument("pulse: phase jump >= pi at index " + std::to_string(i));
  }
}

std::vector<double> detuning_to_phase(const std::vector<double>& delta, double dt) {
  std::vector<double> phi(delta.size(), 0.0);
  for (size_t i = 1; i < delta.size(); ++i)
    phi[i] = phi[i - 1] + 0.5 * dt * (delta[i - 1] + delta[i]);
  return phi;
}

std::vector<double> phase_to_detuning(const std::vector<double>& phi, double dt) {
  const int n = static_cast<int>(phi.size());
  std::vector<double> delta(n, 0.0);
  if (n < 2) return delta;
  if (n == 2) {
    delta[0] = delta[1] = (phi[1] - phi[0]) / dt;
    return delta;
  }
  // second-order one-sided stencils at the ends, central inside
  delta[0] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * dt);
  for (int i = 1; i + 1 < n; ++i) delta[i] = (phi[i + 1] - phi[i - 1]) / (2.0 * dt);
  delta[n - 1] = (3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) / (2.0 * dt);
  return delta;
}

static int grid_size(double duration, double dt) {
  const int n = static_cast<int>(std::llround(duration / dt)) + 1;
  if (n < 2) throw std::invalid_argument("pulse: duration shorter than one sample");
  return n;
}

static Pulse from_detuning(const std::vector<double>& delta, double amplitude, double dt) {
  Pulse p;
  p.dt = dt;
  p.omega_ext.assign(delta.size(), amplitude);
  p.phi_ext = detuning_to_phase(delta, dt);
  p.validate();
  return p;
}

Pulse linear_sweep(const SweepSpec& spec, double dt) {
  if (spec.delta_max <= 0.0 || spec.duration <= 0.0)
    throw std::invalid_argument("linear_sweep: delta_max and duration must be positive");
  const int n = grid_size(spec.duration, dt);
  const double total = (n - 1) * dt;
  std::vector<double> delta(n);
  for (int i = 0; i < n; ++i) delta[i] = spec.delta_max * (2.0 * (i * dt) / total - 1.0);
  return from_detuning(delta, spec.amplitude, dt);
}

Pulse sinusoidal_sweep(const MultiSweepSpec& spec, double dt) {
  if (spec.n_osc < 1) throw std::invalid_argument("sinusoidal_sweep: n_osc must be >= 1");
  if (spec.tau <= 0.0) throw std::invalid_argument("sinusoidal_sweep: tau must be positive");
  const int n = grid_size(spec.n_osc * spec.tau / 2.0, dt);
  std::vector<double> delta(n);
  for (int i = 0; i < n; ++i) delta[i] = -spec.delta_max * std::cos(kTwoPi * (i * dt) / spec.tau);
  return from_detuning(delta, spec.amplitude, dt);
}

Pulse fitted_optimal(const FittedSpec& spec, double dt) {
  if (spec.slowdown <= 0.0 || spec.slowdown > 1.0)
    throw std::invalid_argument("fitted_optimal: slowdown must be in (0, 1]");
  if (spec.poly_order < 1 || spec.poly_order % 2 == 0)
    throw std::invalid_argument("fitted_optimal: poly_order must be odd and >= 1");
  if (spec.n_segments < 1) throw std::invalid_argument("fitted_optimal: need >= 1 segment");
  if (spec.segment <= 0.0) throw std::invalid_argument("fitted_optimal: segment must be positive");

  // Odd blend f(x) = s*x + (1-s)*sign(x)*|x|^p on x in [-1, 1]; endpoints
  // reach +-1, center slope is s times the linear sweep's. Consecutive
  // segments are time-mirrored so the sweep direction alternates.
  const double s = spec.slowdown;
  const int p = spec.poly_order;
  auto f = [s, p](double x) {
    return s * x + (1.0 - s) * (x < 0 ? -std::pow(-x, p) : std::pow(x, p));
  };

  const int n = grid_size(spec.n_segments * spec.segment, dt);
  std::vector<double> delta(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    int k = static_cast<int>(t / spec.segment);
    if (k >= spec.n_segments) k = spec.n_segments - 1;
    double x = 2.0 * (t - k * spec.segment) / spec.segment - 1.0;
    if (x > 1.0) x = 1.0;
    if (k % 2 == 1) x = -x;
    delta[i] = spec.delta_max * f(x);
  }
  return from_detuning(delta, spec.amplitude, dt);
}

Pulse fourier_pulse(const Pulse& base, std::span<const FourierCoeff> coeffs, Channel target,
                    double omega_cap) {
  for (const auto& c : coeffs)
    if (c.omega > omega_cap)
      throw std::invalid_argument("fourier_pulse: frequency above bandwidth cap");
  Pulse out = base;
  for (int i = 0; i < out.size(); ++i) {
    const double t = out.t(i);
    double u = 0.0;
    for (const auto& c : coeffs) u += c.a * std::sin(c.omega * t) + c.b * std::cos(c.omega * t);
    if (target == Channel::phase) {
      out.phi_ext[i] += u;
    } else {
      out.omega_ext[i] = std::clamp(out.omega_ext[i] + u, 0.0, out.omega_max);
    }
  }
  out.validate();
  return out;
}

Pulse recombine(const Pulse& amp_from, const Pulse& phase_from) {
  if (amp_from.size() != phase_from.size() || amp_from.dt != phase_from.dt)
    throw std::invalid_argument("recombine: pulse grids do not match");
  Pulse out = amp_from;
  out.phi_ext = phase_from.phi_ext;
  out.validate();
  return out;
}

Pulse precompensate(const Pulse& pulse, const CavityParams& cav) {
  if (cav.gamma_cav <= 0.0) throw std::invalid_argument("precompensate: gamma_cav must be positive");
  Pulse out = pulse;
  const auto delta = pulse.detuning();
  for (int i = 0; i < out.size(); ++i) {
    const double d = delta[i] + cav.delta_cs;
    const double scale = std::hypot(cav.gamma_cav, d) / cav.gamma_cav;
    out.omega_ext[i] = std::min(out.omega_ext[i] * scale, out.omega_max);
  }
  out.validate();
  return out;
}

}  // namespace dnp
