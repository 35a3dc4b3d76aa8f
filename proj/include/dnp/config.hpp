#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dnp/cavity.hpp"
#include "dnp/ensemble.hpp"
#include "dnp/optimizer.hpp"
#include "dnp/spinsys.hpp"

namespace dnp {

// Flat key-value run configuration ("key = value" lines, '#' comments,
// user-facing values in linear MHz / us / minutes). Unknown keys are
// rejected at load time.
struct RunConfig {
  // paths
  std::string proton_table = std::string(DNP_DATA_DIR) + "/protons_example.csv";
  std::string pulse_csv;  // used when pulse_family = csv

  // system
  double zfs_d_mhz = 1400.0;
  double zfs_e_mhz = 50.0;
  double gamma_s_mhz_per_mt = rad_to_mhz(kGammaElectron);  // signed
  double b0_mt = 230.0;
  double omega_l_mhz = 9.2;
  double delta_es_mhz = 0.0;
  double gamma_el_per_us = 0.1;
  double gamma_loss0_per_us = 1.0 / 80.0;
  double gamma_loss1_per_us = 1.0 / 180.0;
  double electron_p0 = 1.0, electron_p1 = 0.0, electron_ps = 0.0;
  double gamma_i_mhz_per_mt = rad_to_mhz(kGammaProton);

  // cavity
  double gamma_cav_mhz = 9.24;
  double delta_cs_mhz = 0.0;

  // ensemble
  int n_instances = 1000;
  int n_pick = 3;
  int pool_size = 30;
  double detuning_fwhm_mhz = 10.0;
  std::uint64_t seed = 1;
  double fom_noise_sd = 0.0;
  int n_shots = 1;

  // solver
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double field_dt_us = 1e-3;

  // pulse
  std::string pulse_family = "linear";  // linear | sinusoidal | fitted | csv
  double pulse_dt_us = 1e-3;
  double omega_max_mhz = 19.3;
  double sweep_delta_max_mhz = 30.0;
  double sweep_duration_us = 100.0;
  double sweep_amplitude_mhz = 6.0;
  double msweep_delta_max_mhz = 30.0;
  int msweep_n_osc = 8;
  double msweep_tau_us = 40.0;
  double msweep_amplitude_mhz = 6.0;
  double fitted_delta_max_mhz = 30.0;
  double fitted_segment_us = 25.0;
  int fitted_poly_order = 3;
  double fitted_slowdown = 0.25;
  int fitted_n_segments = 4;
  double fitted_amplitude_mhz = 6.0;
  bool precompensate_pulse = false;

  // dcrab
  int n_super = 5;
  int n_basis = 3;
  double freq_lo_mhz = 0.01;
  double freq_hi_mhz = 2.0;
  std::string channels = "phase";  // phase | amplitude | both
  int max_fom_evals = 120;
  double simplex_scale_phase = 1.0;
  double simplex_scale_amp_mhz = 1.0;
  double improve_threshold = 1.0;

  // arise grids (comma-separated lists)
  std::vector<double> step1_delta_max_mhz{20.0, 30.0};
  std::vector<double> step1_duration_us{4.0, 8.0};
  double step1_amplitude_mhz = 6.0;
  std::vector<int> step2_n_osc{2, 4};
  std::vector<double> step2_tau_us{};

  // calibration
  double calib_gamma_lo_mhz = 5.0;
  double calib_gamma_hi_mhz = 14.0;
  int calib_n_candidates = 10;
  double calib_t_max_us = 0.6;
  int calib_n_samples = 256;
  double calib_detuning_range_mhz = 25.0;
  int calib_n_detunings = 51;
  double calib_drive_mhz = 19.3;

  // buildup
  double t1_minutes = 223.0;
  double threshold_fraction = 0.98;

  // run
  int workers = 2;
  int n_out = 400;

  // Derived views ----------------------------------------------------
  SystemParams system_params() const;  // without couplings (ensemble fills them)
  CavityParams cavity_params() const;
  EnsembleSpec ensemble_spec() const;
  DcrabConfig dcrab_config() const;
  SolverOptions solver_options() const;
  Pulse build_pulse() const;  // from pulse_family

  static RunConfig load(const std::string& path);
  void apply_line(const std::string& key, const std::string& value);
};

// Serializes the physical system block in the same key = value format.
std::string system_params_to_config(const SystemParams& params);

}  // namespace dnp
