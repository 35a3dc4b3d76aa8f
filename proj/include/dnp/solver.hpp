#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dnp/cavity.hpp"
#include "dnp/pulse.hpp"
#include "dnp/spinsys.hpp"

namespace dnp {

struct DensityState {
  Eigen::MatrixXcd rho;
  double t = 0.0;
};

struct SolverOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = 0.02;   // us
  double field_dt = 1e-3;   // us, cavity trace spacing used by propagate()
  bool check_positivity = true;
};

struct PolarizationTrace {
  std::vector<double> t;
  std::vector<std::vector<double>> p_nuc;  // [nucleus][sample], <2 I_z>
  std::vector<double> p_mean;
  std::vector<double> pop0, pop1, pop_shelf;
};

struct PropagationResult {
  PolarizationTrace trace;
  DensityState final_state;
};

struct ShotSequence {
  std::vector<double> p_mean;  // mean nuclear polarization after each shot
  DensityState final_state;
};

struct HhWindow {
  std::vector<double> t;
  std::vector<double> upper, lower;  // rad/us, NaN where the window is closed
  std::vector<bool> open;
};

// rho = diag(p0, p1, ps) (x) product of per-nucleus diag((1+p)/2, (1-p)/2).
DensityState initial_state(const SystemParams& params);

// Lindblad propagation over the pulse duration; the intracavity field is
// precomputed with filter_pulse and linearly interpolated inside the RHS.
// Returns n_out equally spaced observable samples plus the final state.
PropagationResult propagate(const DensityState& state, const Pulse& pulse,
                            const SystemParams& params, const CavityParams& cav, int n_out,
                            const SolverOptions& opts = {});

// Propagation against a precomputed field trace (cavity bypass).
PropagationResult propagate_field(const DensityState& state, const FieldTrace& field,
                                  double t_final, const SystemParams& params, int n_out,
                                  const SolverOptions& opts = {});

// Repeats the pulse with electron re-initialization between shots: the
// electron factor is traced out and replaced by the fresh electron_init
// state, keeping all nuclear-nuclear correlations.
ShotSequence repeat_shots(const Pulse& pulse, const SystemParams& params, const CavityParams& cav,
                          int n_shots, const SolverOptions& opts = {});

// Same with a previously filtered field (shared across ensemble instances).
ShotSequence repeat_shots_field(const FieldTrace& field, double duration,
                                const SystemParams& params, int n_shots,
                                const SolverOptions& opts = {});

// Hartmann-Hahn window boundaries +-sqrt(omega_L^2 - |W|^2).
HhWindow hh_window(const FieldTrace& field, double omega_larmor);

double electron_population(const Eigen::MatrixXcd& rho, int level, int n_nuc);
double nuclear_polarization(const Eigen::MatrixXcd& rho, int nucleus, int n_nuc);
Eigen::MatrixXcd trace_out_electron(const Eigen::MatrixXcd& rho, int n_nuc);

}  // namespace dnp
