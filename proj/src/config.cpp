#include "dnp/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dnp/csv.hpp"
#include "dnp/errors.hpp"

namespace dnp {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v) {
  size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw ConfigError("bad numeric value '" + v + "'");
  return x;
}

int parse_int(const std::string& v) {
  size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw ConfigError("bad integer value '" + v + "'");
  return static_cast<int>(x);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean value '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  for (double x : parse_double_list(v)) out.push_back(static_cast<int>(x));
  return out;
}

}  // namespace

void RunConfig::apply_line(const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> schema = {
      {"proton_table", [](RunConfig& c, const std::string& v) { c.proton_table = v; }},
      {"pulse_csv", [](RunConfig& c, const std::string& v) { c.pulse_csv = v; }},
      {"zfs_d_mhz", [](RunConfig& c, const std::string& v) { c.zfs_d_mhz = parse_double(v); }},
      {"zfs_e_mhz", [](RunConfig& c, const std::string& v) { c.zfs_e_mhz = parse_double(v); }},
      {"gamma_s_mhz_per_mt",
       [](RunConfig& c, const std::string& v) { c.gamma_s_mhz_per_mt = parse_double(v); }},
      {"gamma_i_mhz_per_mt",
       [](RunConfig& c, const std::string& v) { c.gamma_i_mhz_per_mt = parse_double(v); }},
      {"b0_mt", [](RunConfig& c, const std::string& v) { c.b0_mt = parse_double(v); }},
      {"omega_l_mhz", [](RunConfig& c, const std::string& v) { c.omega_l_mhz = parse_double(v); }},
      {"delta_es_mhz", [](RunConfig& c, const std::string& v) { c.delta_es_mhz = parse_double(v); }},
      {"gamma_el_per_us",
       [](RunConfig& c, const std::string& v) { c.gamma_el_per_us = parse_double(v); }},
      {"gamma_loss0_per_us",
       [](RunConfig& c, const std::string& v) { c.gamma_loss0_per_us = parse_double(v); }},
      {"gamma_loss1_per_us",
       [](RunConfig& c, const std::string& v) { c.gamma_loss1_per_us = parse_double(v); }},
      {"electron_p0", [](RunConfig& c, const std::string& v) { c.electron_p0 = parse_double(v); }},
      {"electron_p1", [](RunConfig& c, const std::string& v) { c.electron_p1 = parse_double(v); }},
      {"electron_ps", [](RunConfig& c, const std::string& v) { c.electron_ps = parse_double(v); }},
      {"gamma_cav_mhz", [](RunConfig& c, const std::string& v) { c.gamma_cav_mhz = parse_double(v); }},
      {"delta_cs_mhz", [](RunConfig& c, const std::string& v) { c.delta_cs_mhz = parse_double(v); }},
      {"n_instances", [](RunConfig& c, const std::string& v) { c.n_instances = parse_int(v); }},
      {"n_pick", [](RunConfig& c, const std::string& v) { c.n_pick = parse_int(v); }},
      {"pool_size", [](RunConfig& c, const std::string& v) { c.pool_size = parse_int(v); }},
      {"detuning_fwhm_mhz",
       [](RunConfig& c, const std::string& v) { c.detuning_fwhm_mhz = parse_double(v); }},
      {"seed",
       [](RunConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(std::stoull(v)); }},
      {"fom_noise_sd", [](RunConfig& c, const std::string& v) { c.fom_noise_sd = parse_double(v); }},
      {"n_shots", [](RunConfig& c, const std::string& v) { c.n_shots = parse_int(v); }},
      {"rel_tol", [](RunConfig& c, const std::string& v) { c.rel_tol = parse_double(v); }},
      {"abs_tol", [](RunConfig& c, const std::string& v) { c.abs_tol = parse_double(v); }},
      {"field_dt_us", [](RunConfig& c, const std::string& v) { c.field_dt_us = parse_double(v); }},
      {"pulse_family", [](RunConfig& c, const std::string& v) { c.pulse_family = v; }},
      {"pulse_dt_us", [](RunConfig& c, const std::string& v) { c.pulse_dt_us = parse_double(v); }},
      {"omega_max_mhz", [](RunConfig& c, const std::string& v) { c.omega_max_mhz = parse_double(v); }},
      {"sweep_delta_max_mhz",
       [](RunConfig& c, const std::string& v) { c.sweep_delta_max_mhz = parse_double(v); }},
      {"sweep_duration_us",
       [](RunConfig& c, const std::string& v) { c.sweep_duration_us = parse_double(v); }},
      {"sweep_amplitude_mhz",
       [](RunConfig& c, const std::string& v) { c.sweep_amplitude_mhz = parse_double(v); }},
      {"msweep_delta_max_mhz",
       [](RunConfig& c, const std::string& v) { c.msweep_delta_max_mhz = parse_double(v); }},
      {"msweep_n_osc", [](RunConfig& c, const std::string& v) { c.msweep_n_osc = parse_int(v); }},
      {"msweep_tau_us", [](RunConfig& c, const std::string& v) { c.msweep_tau_us = parse_double(v); }},
      {"msweep_amplitude_mhz",
       [](RunConfig& c, const std::string& v) { c.msweep_amplitude_mhz = parse_double(v); }},
      {"fitted_delta_max_mhz",
       [](RunConfig& c, const std::string& v) { c.fitted_delta_max_mhz = parse_double(v); }},
      {"fitted_segment_us",
       [](RunConfig& c, const std::string& v) { c.fitted_segment_us = parse_double(v); }},
      {"fitted_poly_order",
       [](RunConfig& c, const std::string& v) { c.fitted_poly_order = parse_int(v); }},
      {"fitted_slowdown",
       [](RunConfig& c, const std::string& v) { c.fitted_slowdown = parse_double(v); }},
      {"fitted_n_segments",
       [](RunConfig& c, const std::string& v) { c.fitted_n_segments = parse_int(v); }},
      {"fitted_amplitude_mhz",
       [](RunConfig& c, const std::string& v) { c.fitted_amplitude_mhz = parse_double(v); }},
      {"precompensate_pulse",
       [](RunConfig& c, const std::string& v) { c.precompensate_pulse = parse_bool(v); }},
      {"n_super", [](RunConfig& c, const std::string& v) { c.n_super = parse_int(v); }},
      {"n_basis", [](RunConfig& c, const std::string& v) { c.n_basis = parse_int(v); }},
      {"freq_lo_mhz", [](RunConfig& c, const std::string& v) { c.freq_lo_mhz = parse_double(v); }},
      {"freq_hi_mhz", [](RunConfig& c, const std::string& v) { c.freq_hi_mhz = parse_double(v); }},
      {"channels", [](RunConfig& c, const std::string& v) { c.channels = v; }},
      {"max_fom_evals", [](RunConfig& c, const std::string& v) { c.max_fom_evals = parse_int(v); }},
      {"simplex_scale_phase",
       [](RunConfig& c, const std::string& v) { c.simplex_scale_phase = parse_double(v); }},
      {"simplex_scale_amp_mhz",
       [](RunConfig& c, const std::string& v) { c.simplex_scale_amp_mhz = parse_double(v); }},
      {"improve_threshold",
       [](RunConfig& c, const std::string& v) { c.improve_threshold = parse_double(v); }},
      {"step1_delta_max_mhz",
       [](RunConfig& c, const std::string& v) { c.step1_delta_max_mhz = parse_double_list(v); }},
      {"step1_duration_us",
       [](RunConfig& c, const std::string& v) { c.step1_duration_us = parse_double_list(v); }},
      {"step1_amplitude_mhz",
       [](RunConfig& c, const std::string& v) { c.step1_amplitude_mhz = parse_double(v); }},
      {"step2_n_osc", [](RunConfig& c, const std::string& v) { c.step2_n_osc = parse_int_list(v); }},
      {"step2_tau_us",
       [](RunConfig& c, const std::string& v) { c.step2_tau_us = parse_double_list(v); }},
      {"calib_gamma_lo_mhz",
       [](RunConfig& c, const std::string& v) { c.calib_gamma_lo_mhz = parse_double(v); }},
      {"calib_gamma_hi_mhz",
       [](RunConfig& c, const std::string& v) { c.calib_gamma_hi_mhz = parse_double(v); }},
      {"calib_n_candidates",
       [](RunConfig& c, const std::string& v) { c.calib_n_candidates = parse_int(v); }},
      {"calib_t_max_us",
       [](RunConfig& c, const std::string& v) { c.calib_t_max_us = parse_double(v); }},
      {"calib_n_samples",
       [](RunConfig& c, const std::string& v) { c.calib_n_samples = parse_int(v); }},
      {"calib_detuning_range_mhz",
       [](RunConfig& c, const std::string& v) { c.calib_detuning_range_mhz = parse_double(v); }},
      {"calib_n_detunings",
       [](RunConfig& c, const std::string& v) { c.calib_n_detunings = parse_int(v); }},
      {"calib_drive_mhz",
       [](RunConfig& c, const std::string& v) { c.calib_drive_mhz = parse_double(v); }},
      {"t1_minutes", [](RunConfig& c, const std::string& v) { c.t1_minutes = parse_double(v); }},
      {"threshold_fraction",
       [](RunConfig& c, const std::string& v) { c.threshold_fraction = parse_double(v); }},
      {"workers", [](RunConfig& c, const std::string& v) { c.workers = parse_int(v); }},
      {"n_out", [](RunConfig& c, const std::string& v) { c.n_out = parse_int(v); }},
  };

  const auto it = schema.find(key);
  if (it == schema.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second(*this, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for key '" + key + "': '" + value + "'");
  }
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    try {
      config.apply_line(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& err) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  return config;
}

SystemParams RunConfig::system_params() const {
  SystemParams p;
  p.zfs.d = mhz_to_rad(zfs_d_mhz);
  p.zfs.e = mhz_to_rad(zfs_e_mhz);
  p.zfs.gamma_s = mhz_to_rad(gamma_s_mhz_per_mt);
  p.zfs.b0 = b0_mt;
  p.omega_larmor = mhz_to_rad(omega_l_mhz);
  p.delta_es = mhz_to_rad(delta_es_mhz);
  p.rates.gamma_el = gamma_el_per_us;
  p.rates.gamma_loss0 = gamma_loss0_per_us;
  p.rates.gamma_loss1 = gamma_loss1_per_us;
  p.electron_init = {electron_p0, electron_p1, electron_ps};
  return p;
}

CavityParams RunConfig::cavity_params() const {
  return {mhz_to_rad(gamma_cav_mhz), mhz_to_rad(delta_cs_mhz)};
}

EnsembleSpec RunConfig::ensemble_spec() const {
  EnsembleSpec spec;
  spec.n_instances = n_instances;
  spec.n_pick = n_pick;
  spec.pool_size = pool_size;
  spec.detuning_fwhm = mhz_to_rad(detuning_fwhm_mhz);
  spec.seed = seed;
  spec.fom_noise_sd = fom_noise_sd;
  return spec;
}

DcrabConfig RunConfig::dcrab_config() const {
  DcrabConfig c;
  c.n_super = n_super;
  c.n_basis = n_basis;
  c.freq_lo = mhz_to_rad(freq_lo_mhz);
  c.freq_hi = mhz_to_rad(freq_hi_mhz);
  if (channels == "phase") {
    c.use_phase = true;
    c.use_amplitude = false;
  } else if (channels == "amplitude") {
    c.use_phase = false;
    c.use_amplitude = true;
  } else if (channels == "both") {
    c.use_phase = c.use_amplitude = true;
  } else {
    throw ConfigError("channels must be phase|amplitude|both");
  }
  c.max_fom_evals = max_fom_evals;
  c.scale_phase = simplex_scale_phase;
  c.scale_amplitude = mhz_to_rad(simplex_scale_amp_mhz);
  c.improve_threshold = improve_threshold;
  c.seed = seed + 1;  // separate stream from the ensemble sampling
  return c;
}

SolverOptions RunConfig::solver_options() const {
  SolverOptions opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = abs_tol;
  opts.field_dt = field_dt_us;
  return opts;
}

Pulse RunConfig::build_pulse() const {
  const double omega_max = mhz_to_rad(omega_max_mhz);
  Pulse pulse;
  if (pulse_family == "linear") {
    pulse = linear_sweep({mhz_to_rad(sweep_delta_max_mhz), sweep_duration_us,
                          mhz_to_rad(sweep_amplitude_mhz)},
                         pulse_dt_us);
  } else if (pulse_family == "sinusoidal") {
    pulse = sinusoidal_sweep({mhz_to_rad(msweep_delta_max_mhz), msweep_n_osc, msweep_tau_us,
                              mhz_to_rad(msweep_amplitude_mhz)},
                             pulse_dt_us);
  } else if (pulse_family == "fitted") {
    pulse = fitted_optimal({mhz_to_rad(fitted_delta_max_mhz), fitted_segment_us, fitted_poly_order,
                            fitted_slowdown, fitted_n_segments, mhz_to_rad(fitted_amplitude_mhz)},
                           pulse_dt_us);
  } else if (pulse_family == "csv") {
    throw ConfigError("pulse_family csv must be loaded through the runner");
  } else {
    throw ConfigError("unknown pulse_family '" + pulse_family + "'");
  }
  pulse.omega_max = omega_max;
  pulse.validate();
  if (precompensate_pulse) pulse = precompensate(pulse, cavity_params());
  return pulse;
}

std::string system_params_to_config(const SystemParams& params) {
  std::ostringstream out;
  out << "# electron/nuclei/dissipation parameters (linear MHz, us, mT)\n";
  out << "zfs_d_mhz = " << format_g12(rad_to_mhz(params.zfs.d)) << "\n";
  out << "zfs_e_mhz = " << format_g12(rad_to_mhz(params.zfs.e)) << "\n";
  out << "gamma_s_mhz_per_mt = " << format_g12(rad_to_mhz(params.zfs.gamma_s)) << "\n";
  out << "b0_mt = " << format_g12(params.zfs.b0) << "\n";
  out << "omega_l_mhz = " << format_g12(rad_to_mhz(params.omega_larmor)) << "\n";
  out << "delta_es_mhz = " << format_g12(rad_to_mhz(params.delta_es)) << "\n";
  out << "gamma_el_per_us = " << format_g12(params.rates.gamma_el) << "\n";
  out << "gamma_loss0_per_us = " << format_g12(params.rates.gamma_loss0) << "\n";
  out << "gamma_loss1_per_us = " << format_g12(params.rates.gamma_loss1) << "\n";
  out << "electron_p0 = " << format_g12(params.electron_init[0]) << "\n";
  out << "electron_p1 = " << format_g12(params.electron_init[1]) << "\n";
  out << "electron_ps = " << format_g12(params.electron_init[2]) << "\n";
  return out.str();
}

}  // namespace dnp
