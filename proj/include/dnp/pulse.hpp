#pragma once

#include <complex>
#include <span>
#include <vector>

#include "dnp/units.hpp"

namespace dnp {

struct CavityParams;

// Time-sampled external drive on a uniform grid t_i = i*dt. The amplitude
// envelope omega_ext is non-negative and capped at omega_max; the phase is
// sampled densely enough that consecutive samples differ by less than pi.
struct Pulse {
  double dt = 1e-3;                // us
  std::vector<double> omega_ext;   // rad/us
  std::vector<double> phi_ext;     // rad
  double omega_max = kMaxRabi;     // rad/us

  int size() const { return static_cast<int>(omega_ext.size()); }
  double t(int i) const { return i * dt; }
  double duration() const { return (size() - 1) * dt; }

  // Complex drive term omega_ext * exp(-i*phi_ext) entering the cavity.
  std::complex<double> drive(int i) const {
    return omega_ext[i] * std::exp(std::complex<double>(0.0, -phi_ext[i]));
  }

  std::vector<double> detuning() const;  // phi-dot per sample

  void validate() const;  // throws std::invalid_argument on violation
};

struct SweepSpec {
  double delta_max;  // rad/us
  double duration;   // us
  double amplitude;  // rad/us
};

struct MultiSweepSpec {
  double delta_max;  // rad/us
  int n_osc;         // number of half-oscillations
  double tau;        // period, us
  double amplitude;  // rad/us
};

struct FittedSpec {
  double delta_max;      // rad/us
  double segment;        // us per segment
  int poly_order = 3;    // odd
  double slowdown = 0.25;  // center-slope fraction relative to the linear sweep
  int n_segments = 4;
  double amplitude;      // rad/us
};

enum class Channel { amplitude, phase };

struct FourierCoeff {
  double a = 0.0;      // sin coefficient
  double b = 0.0;      // cos coefficient
  double omega = 0.0;  // rad/us
};

// phi(t) = integral of the detuning, trapezoidal, phi(0) = 0.
std::vector<double> detuning_to_phase(const std::vector<double>& delta, double dt);
// Numerical derivative: central differences inside, one-sided at the ends.
std::vector<double> phase_to_detuning(const std::vector<double>& phi, double dt);

Pulse linear_sweep(const SweepSpec& spec, double dt);
Pulse sinusoidal_sweep(const MultiSweepSpec& spec, double dt);
Pulse fitted_optimal(const FittedSpec& spec, double dt);

// Adds sum_l [a_l sin(w_l t) + b_l cos(w_l t)] to one control channel.
// Frequencies above omega_cap are rejected; after addition the amplitude
// channel is clamped to [0, omega_max].
Pulse fourier_pulse(const Pulse& base, std::span<const FourierCoeff> coeffs, Channel target,
                    double omega_cap);

// Amplitude array of the first pulse with the phase array of the second.
Pulse recombine(const Pulse& amp_from, const Pulse& phase_from);

// Scales the amplitude by the inverse quasi-static cavity magnitude
// response |gamma + i*(phi_dot + delta_cs)| / gamma, clamped to omega_max.
Pulse precompensate(const Pulse& pulse, const CavityParams& cav);

}  // namespace dnp
