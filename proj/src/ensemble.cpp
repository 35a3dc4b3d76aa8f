#include "dnp/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dnp/csv.hpp"
#include "dnp/errors.hpp"
#include "dnp/parallel.hpp"

namespace dnp {

HyperfineTensor compute_hyperfine(const Eigen::Vector3d& position_nm, double gamma_s,
                                  double gamma_i) {
  const double r = position_nm.norm();
  if (r <= 0.05)
    throw std::invalid_argument("compute_hyperfine: position too close to the electron origin");
  const Eigen::Vector3d n = position_nm / r;
  const double d = kDipolarPrefactor * gamma_s * gamma_i / (r * r * r);
  HyperfineTensor a;
  a.a_zx = d * (-3.0 * n.z() * n.x());
  a.a_zy = d * (-3.0 * n.z() * n.y());
  a.a_zz = d * (1.0 - 3.0 * n.z() * n.z());
  return a;
}

ProtonTable build_proton_table(const std::vector<Eigen::Vector3d>& positions_nm, double gamma_s,
                               double gamma_i) {
  ProtonTable table;
  table.positions = positions_nm;
  table.tensors.reserve(positions_nm.size());
  for (const auto& pos : positions_nm) table.tensors.push_back(compute_hyperfine(pos, gamma_s, gamma_i));
  table.ranking.resize(table.size());
  std::iota(table.ranking.begin(), table.ranking.end(), 0);
  std::stable_sort(table.ranking.begin(), table.ranking.end(), [&](int a, int b) {
    return table.tensors[a].norm() > table.tensors[b].norm();
  });
  return table;
}

ProtonTable read_proton_table(const std::string& csv_path, double gamma_s, double gamma_i) {
  const CsvTable csv = read_csv(csv_path);
  const int cx = csv.col_index("x_nm"), cy = csv.col_index("y_nm"), cz = csv.col_index("z_nm");
  if (cx < 0 || cy < 0 || cz < 0)
    throw ConfigError("proton table: expected header x_nm,y_nm,z_nm in " + csv_path);
  std::vector<Eigen::Vector3d> positions;
  positions.reserve(csv.rows.size());
  for (const auto& row : csv.rows) positions.emplace_back(row[cx], row[cy], row[cz]);
  return build_proton_table(positions, gamma_s, gamma_i);
}

void EnsembleSpec::validate(int table_size) const {
  if (n_instances < 1) throw std::invalid_argument("ensemble: n_instances must be >= 1");
  if (n_pick < 1 || n_pick > 3) throw std::invalid_argument("ensemble: n_pick must be 1..3");
  if (n_pick > pool_size || pool_size > table_size)
    throw std::invalid_argument("ensemble: need n_pick <= pool_size <= table size");
  if (detuning_fwhm < 0.0) throw std::invalid_argument("ensemble: detuning FWHM must be >= 0");
}

EnsembleInstance sample_instance(const EnsembleSpec& spec, const ProtonTable& table, Rng& rng) {
  spec.validate(table.size());
  // Partial Fisher-Yates over the top pool_size ranks.
  std::vector<int> pool(table.ranking.begin(), table.ranking.begin() + spec.pool_size);
  EnsembleInstance instance;
  for (int k = 0; k < spec.n_pick; ++k) {
    const int j = k + static_cast<int>(rng.uniform_int(spec.pool_size - k));
    std::swap(pool[k], pool[j]);
    instance.nuclei.push_back(pool[k]);
  }
  const double sigma = spec.detuning_fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  instance.delta_es = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
  return instance;
}

FomResult evaluate_fom(const Pulse& pulse, const EnsembleSpec& spec, const SystemParams& base,
                       const CavityParams& cav, int n_shots, const ProtonTable& table,
                       int n_workers, const SolverOptions& opts) {
  Rng rng(spec.seed);
  std::vector<EnsembleInstance> instances;
  instances.reserve(spec.n_instances);
  for (int i = 0; i < spec.n_instances; ++i) instances.push_back(sample_instance(spec, table, rng));

  // The filtered field depends only on the pulse and cavity, so share it.
  const FieldTrace field = filter_pulse(pulse, cav, std::min(opts.field_dt, pulse.dt));

  FomResult result;
  result.seed = spec.seed;
  result.per_instance.assign(spec.n_instances, 0.0);

  parallel_for(spec.n_instances, n_workers, [&](int i) {
    SystemParams params = base;
    params.couplings.clear();
    for (int idx : instances[i].nuclei) params.couplings.push_back(table.tensors[idx]);
    params.delta_es = base.delta_es + instances[i].delta_es;
    if (!params.nuclear_init_pol.empty()) params.nuclear_init_pol.resize(params.couplings.size(), 0.0);
    try {
      const auto shots = repeat_shots_field(field, pulse.duration(), params, n_shots, opts);
      result.per_instance[i] = shots.p_mean.back();
    } catch (const SolverError& err) {
      throw SolverError("instance " + std::to_string(i) + ": " + err.what());
    }
  });

  double mean = 0.0;
  for (double v : result.per_instance) mean += v;
  mean /= spec.n_instances;
  double var = 0.0;
  for (double v : result.per_instance) var += (v - mean) * (v - mean);
  result.mean = mean;
  result.std_err =
      spec.n_instances > 1 ? std::sqrt(var / (spec.n_instances - 1) / spec.n_instances) : 0.0;

  if (spec.fom_noise_sd > 0.0) {
    Rng noise = rng.fork(0x5eed);
    result.mean += noise.normal(0.0, spec.fom_noise_sd);
    result.std_err = std::max(result.std_err, spec.fom_noise_sd);
  }
  return result;
}

}  // namespace dnp
