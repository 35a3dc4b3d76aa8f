#pragma once

#include <complex>
#include <string>
#include <vector>

#include "dnp/pulse.hpp"
#include "dnp/spinsys.hpp"
#include "dnp/units.hpp"

namespace dnp {

struct CavityParams {
  double gamma_cav = mhz_to_rad(9.24);  // response factor, rad/us
  double delta_cs = 0.0;                // cavity detuning from electron resonance, rad/us
};

// Intracavity field on a uniform grid starting at t = 0.
struct FieldTrace {
  double dt = 1e-3;  // us
  std::vector<std::complex<double>> omega_int;  // rad/us

  int size() const { return static_cast<int>(omega_int.size()); }
  double t(int i) const { return i * dt; }
  double duration() const { return (size() - 1) * dt; }

  // Linear interpolation, clamped at the ends.
  std::complex<double> at(double time) const;
};

// Integrates d(W)/dt = gamma_cav (omega_ext e^{-i phi} - W) - i delta_cs W
// with W(0) = 0. The drive is treated as piecewise linear between pulse
// samples and each interval is integrated in closed form.
FieldTrace filter_pulse(const Pulse& pulse, const CavityParams& cav, double dt_out);

// Closed-form response to a constant drive.
std::complex<double> cavity_steady_state(double omega_ext, double phi, const CavityParams& cav);

// Magnitude spectra of the driven electron population for a list of cavity
// detunings. Axes are user-facing linear MHz.
struct SpectrumGrid {
  std::vector<double> freq_mhz;
  std::vector<double> detuning_mhz;
  std::vector<std::vector<double>> mag;  // [detuning][freq]
  double t_max_us = 0.6;
  int n_time = 256;
};

struct RabiGridSettings {
  double t_max = 0.6;        // us
  int n_time = 256;
  double drive = kMaxRabi;   // constant external amplitude, rad/us
};

SpectrumGrid simulate_rabi_grid(double gamma_cav, const std::vector<double>& detunings,
                                const RabiGridSettings& settings, const SystemParams& params,
                                int n_workers = 1);

struct GammaCalibration {
  double gamma_est = 0.0;          // rad/us, fitted minimum location
  std::vector<double> candidates;  // rad/us
  std::vector<double> errors;      // summed absolute grid difference
  // error(g) ~ c0 - c1 exp(-(g - mu)^2 / (2 s^2)); stored as (c0, c1, mu, s).
  std::array<double, 4> gauss{};
};

GammaCalibration calibrate_gamma(const SpectrumGrid& measured, const std::vector<double>& candidates,
                                 double drive, const SystemParams& params, int n_workers = 1);

SpectrumGrid read_spectrum_csv(const std::string& path);
void write_spectrum_csv(const std::string& path, const SpectrumGrid& grid);

}  // namespace dnp
