#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dnp/rng.hpp"
#include "dnp/solver.hpp"
#include "dnp/spinsys.hpp"

namespace dnp {

// Hyperfine coupling table built from proton positions around the electron
// origin. Ranking sorts indices by coupling norm, strongest first.
struct ProtonTable {
  std::vector<Eigen::Vector3d> positions;  // nm
  std::vector<HyperfineTensor> tensors;
  std::vector<int> ranking;

  int size() const { return static_cast<int>(tensors.size()); }
};

// Point-dipole secular tensor A_zk = d (delta_zk - 3 n_z n_k) with
// d = mu0 gamma_S gamma_I hbar / (4 pi r^3). Gammas in rad/us/mT, r in nm.
HyperfineTensor compute_hyperfine(const Eigen::Vector3d& position_nm, double gamma_s,
                                  double gamma_i);

ProtonTable build_proton_table(const std::vector<Eigen::Vector3d>& positions_nm, double gamma_s,
                               double gamma_i);

ProtonTable read_proton_table(const std::string& csv_path, double gamma_s, double gamma_i);

struct EnsembleSpec {
  int n_instances = 1000;
  int n_pick = 3;
  int pool_size = 30;
  double detuning_fwhm = mhz_to_rad(10.0);  // rad/us
  std::uint64_t seed = 0;
  double fom_noise_sd = 0.0;  // optional additive Gaussian noise on the mean

  void validate(int table_size) const;
};

struct EnsembleInstance {
  std::vector<int> nuclei;  // indices into the table
  double delta_es = 0.0;    // rad/us
};

EnsembleInstance sample_instance(const EnsembleSpec& spec, const ProtonTable& table, Rng& rng);

struct FomResult {
  double mean = 0.0;
  double std_err = 0.0;
  std::vector<double> per_instance;
  std::uint64_t seed = 0;
};

// Ensemble-averaged figure of merit: for each instance the sampled nuclei
// and detuning are inserted into base_params, the pulse is applied n_shots
// times and the final mean nuclear polarization is recorded. Deterministic
// for a fixed spec.seed regardless of worker count.
FomResult evaluate_fom(const Pulse& pulse, const EnsembleSpec& spec, const SystemParams& base,
                       const CavityParams& cav, int n_shots, const ProtonTable& table,
                       int n_workers = 1, const SolverOptions& opts = {});

}  // namespace dnp
