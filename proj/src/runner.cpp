#include "dnp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <mutex>

#include "dnp/buildup.hpp"
#include "dnp/csv.hpp"
#include "dnp/errors.hpp"
#include "dnp/parallel.hpp"
#include "dnp/solver.hpp"
#include "dnp/svgplot.hpp"

namespace dnp {

namespace fs = std::filesystem;
using json = nlohmann::json;

void write_pulse_csv(const std::string& path, const Pulse& pulse) {
  CsvTable table;
  table.header = {"t_us", "omega_ext_MHz", "phi_rad", "delta_MHz"};
  const auto delta = pulse.detuning();
  table.rows.reserve(pulse.size());
  for (int i = 0; i < pulse.size(); ++i)
    table.rows.push_back({pulse.t(i), rad_to_mhz(pulse.omega_ext[i]), pulse.phi_ext[i],
                          rad_to_mhz(delta[i])});
  write_csv(path, table);
}

Pulse read_pulse_csv(const std::string& path, double omega_max) {
  const CsvTable table = read_csv(path);
  const int ct = table.col_index("t_us");
  const int co = table.col_index("omega_ext_MHz");
  const int cp = table.col_index("phi_rad");
  if (ct < 0 || co < 0 || cp < 0)
    throw ConfigError("pulse CSV: expected columns t_us, omega_ext_MHz, phi_rad in " + path);
  if (table.n_rows() < 2) throw ConfigError("pulse CSV: need at least two samples");

  Pulse pulse;
  pulse.omega_max = omega_max;
  pulse.dt = table.rows[1][ct] - table.rows[0][ct];
  pulse.omega_ext.reserve(table.n_rows());
  pulse.phi_ext.reserve(table.n_rows());
  for (const auto& row : table.rows) {
    pulse.omega_ext.push_back(mhz_to_rad(row[co]));
    pulse.phi_ext.push_back(row[cp]);
  }
  pulse.validate();
  return pulse;
}

namespace {

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir);
}

void write_manifest(const RunContext& ctx, const std::string& command) {
  json m;
  m["command"] = command;
  m["version"] = "0.1.0";
  m["seed"] = ctx.config.seed;
  m["workers"] = ctx.config.workers;
  std::string config_bytes;
  if (!ctx.config_path.empty()) config_bytes = read_text_file(ctx.config_path);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_bytes)));
  m["config_hash"] = buf;
  write_text_file(ctx.out_dir + "/manifest.json", m.dump(2) + "\n");
}

Pulse pulse_from_config(const RunConfig& config) {
  if (config.pulse_family == "csv") {
    if (config.pulse_csv.empty()) throw ConfigError("pulse_family=csv needs pulse_csv");
    return read_pulse_csv(config.pulse_csv, mhz_to_rad(config.omega_max_mhz));
  }
  return config.build_pulse();
}

ProtonTable table_from_config(const RunConfig& config) {
  if (!fs::exists(config.proton_table))
    throw ConfigError("proton table not found: " + config.proton_table);
  return read_proton_table(config.proton_table, mhz_to_rad(config.gamma_s_mhz_per_mt),
                           mhz_to_rad(config.gamma_i_mhz_per_mt));
}

// Crash-safe JSON-lines log with deterministic replay: previously recorded
// evaluations are served back in order instead of re-running the simulator,
// so a restarted run continues exactly where it stopped.
class JsonlLog {
 public:
  explicit JsonlLog(const std::string& path) : path_(path) {
    if (fs::exists(path)) {
      std::ifstream in(path);
      std::string line;
      std::string complete;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) break;  // partial trailing line from a crash
        replay_.push_back(std::move(j));
        complete += line + "\n";
      }
      write_text_file(path, complete);  // drop any partial tail
    }
    out_.open(path, std::ios::app);
    if (!out_) throw ConfigError("cannot open record log: " + path);
  }

  FomValue eval(IterationRecord& it, const std::function<FomValue()>& fresh) {
    if (!replay_.empty()) {
      const json j = replay_.front();
      replay_.pop_front();
      if (j.value("stage", "") != it.stage || j.value("si", -1) != it.super_idx ||
          j.value("eval", -1) != it.eval_idx)
        throw ConfigError("record log does not match this run; use a clean output directory");
      return {j.at("fom").get<double>(), j.at("err").get<double>()};
    }
    const FomValue v = fresh();
    json j;
    j["stage"] = it.stage;
    j["si"] = it.super_idx;
    j["eval"] = it.eval_idx;
    j["freqs"] = it.freqs;
    j["coeffs"] = it.coeffs;
    j["fom"] = v.value;
    j["err"] = v.err;
    out_ << j.dump() << "\n";
    out_.flush();
    return v;
  }

 private:
  std::string path_;
  std::deque<json> replay_;
  std::ofstream out_;
};

}  // namespace

int cmd_simulate(const RunContext& ctx) {
  const RunConfig& config = ctx.config;
  ensure_out_dir(ctx.out_dir);
  write_manifest(ctx, "simulate");

  const Pulse pulse = pulse_from_config(config);
  const ProtonTable table = table_from_config(config);
  const SystemParams base = config.system_params();
  const CavityParams cav = config.cavity_params();
  const EnsembleSpec spec = config.ensemble_spec();
  const SolverOptions opts = config.solver_options();
  const int n_out = std::max(2, config.n_out);

  write_pulse_csv(ctx.out_dir + "/pulse.csv", pulse);

  const FieldTrace field = filter_pulse(pulse, cav, std::min(opts.field_dt, pulse.dt));

  // Ensemble-mean observable trace over one shot per instance.
  Rng rng(spec.seed);
  std::vector<EnsembleInstance> instances;
  for (int i = 0; i < spec.n_instances; ++i) instances.push_back(sample_instance(spec, table, rng));

  std::vector<double> sum_pmean(n_out, 0.0), sum_p0(n_out, 0.0), sum_p1(n_out, 0.0),
      sum_ps(n_out, 0.0);
  std::vector<std::vector<double>> sum_pnuc(spec.n_pick, std::vector<double>(n_out, 0.0));
  std::vector<double> finals(spec.n_instances, 0.0);
  std::vector<double> t_axis;
  std::mutex acc_mutex;

  parallel_for(spec.n_instances, config.workers, [&](int i) {
    SystemParams params = base;
    params.couplings.clear();
    for (int idx : instances[i].nuclei) params.couplings.push_back(table.tensors[idx]);
    params.delta_es = base.delta_es + instances[i].delta_es;
    const auto res =
        propagate_field(initial_state(params), field, pulse.duration(), params, n_out, opts);
    finals[i] = res.trace.p_mean.back();
    std::lock_guard<std::mutex> lock(acc_mutex);
    if (t_axis.empty()) t_axis = res.trace.t;
    for (int k = 0; k < n_out; ++k) {
      sum_pmean[k] += res.trace.p_mean[k];
      sum_p0[k] += res.trace.pop0[k];
      sum_p1[k] += res.trace.pop1[k];
      sum_ps[k] += res.trace.pop_shelf[k];
      for (int j = 0; j < params.n_nuc(); ++j) sum_pnuc[j][k] += res.trace.p_nuc[j][k];
    }
  });

  const double inv_n = 1.0 / spec.n_instances;
  CsvTable trace;
  trace.header = {"t_us", "p_mean"};
  for (int j = 0; j < spec.n_pick; ++j) trace.header.push_back("p_nuc_" + std::to_string(j + 1));
  trace.header.insert(trace.header.end(), {"pop0", "pop1", "pop_shelf"});
  for (int k = 0; k < n_out; ++k) {
    std::vector<double> row{t_axis[k], sum_pmean[k] * inv_n};
    for (int j = 0; j < spec.n_pick; ++j) row.push_back(sum_pnuc[j][k] * inv_n);
    row.insert(row.end(), {sum_p0[k] * inv_n, sum_p1[k] * inv_n, sum_ps[k] * inv_n});
    trace.rows.push_back(std::move(row));
  }
  write_csv(ctx.out_dir + "/trace.csv", trace);

  // Field and Hartmann-Hahn window sampled on the same output grid.
  CsvTable field_csv;
  field_csv.header = {"t_us", "omega_int_re_MHz", "omega_int_im_MHz", "omega_int_abs_MHz"};
  CsvTable hh_csv;
  hh_csv.header = {"t_us", "delta_lower_MHz", "delta_upper_MHz", "open"};
  const double omega_l = base.omega_larmor;
  for (int k = 0; k < n_out; ++k) {
    const auto w = field.at(t_axis[k]);
    field_csv.rows.push_back(
        {t_axis[k], rad_to_mhz(w.real()), rad_to_mhz(w.imag()), rad_to_mhz(std::abs(w))});
    const double m = std::abs(w);
    if (m <= omega_l) {
      const double b = std::sqrt(omega_l * omega_l - m * m);
      hh_csv.rows.push_back({t_axis[k], -rad_to_mhz(b), rad_to_mhz(b), 1.0});
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      hh_csv.rows.push_back({t_axis[k], nan, nan, 0.0});
    }
  }
  write_csv(ctx.out_dir + "/field.csv", field_csv);
  write_csv(ctx.out_dir + "/hh_window.csv", hh_csv);

  double mean = 0.0;
  for (double v : finals) mean += v;
  mean *= inv_n;
  double var = 0.0;
  for (double v : finals) var += (v - mean) * (v - mean);
  const double std_err =
      spec.n_instances > 1 ? std::sqrt(var / (spec.n_instances - 1) / spec.n_instances) : 0.0;

  json summary;
  summary["final_p_mean"] = mean;
  summary["std_err"] = std_err;
  summary["n_instances"] = spec.n_instances;
  summary["seed"] = spec.seed;
  summary["pulse_family"] = config.pulse_family;
  summary["duration_us"] = pulse.duration();
  write_text_file(ctx.out_dir + "/summary.json", summary.dump(2) + "\n");

  std::vector<double> mean_trace(n_out);
  for (int k = 0; k < n_out; ++k) mean_trace[k] = sum_pmean[k] * inv_n;
  write_svg_chart(ctx.out_dir + "/polarization.svg", "Nuclear polarization during the pulse",
                  "t (us)", "p_mean", {{"p_mean", t_axis, mean_trace}});
  std::vector<double> abs_field(n_out);
  for (int k = 0; k < n_out; ++k) abs_field[k] = field_csv.rows[k][3];
  write_svg_chart(ctx.out_dir + "/field.svg", "Intracavity field", "t (us)", "|Omega_int| (MHz)",
                  {{"|Omega_int|", t_axis, abs_field}});
  return 0;
}

int cmd_calibrate(const RunContext& ctx, const std::string& grid_csv, double synthetic_gamma_mhz) {
  const RunConfig& config = ctx.config;
  ensure_out_dir(ctx.out_dir);
  write_manifest(ctx, "calibrate");
  if (config.calib_n_candidates < 4)
    throw ConfigError("calibrate: need at least 4 gamma candidates for the Gaussian fit");

  const SystemParams base = config.system_params();
  RabiGridSettings settings;
  settings.t_max = config.calib_t_max_us;
  settings.n_time = config.calib_n_samples;
  settings.drive = mhz_to_rad(config.calib_drive_mhz);

  std::vector<double> detunings(config.calib_n_detunings);
  for (int i = 0; i < config.calib_n_detunings; ++i)
    detunings[i] = mhz_to_rad(-config.calib_detuning_range_mhz +
                              2.0 * config.calib_detuning_range_mhz * i /
                                  (config.calib_n_detunings - 1));

  SpectrumGrid measured;
  if (synthetic_gamma_mhz > 0.0) {
    measured = simulate_rabi_grid(mhz_to_rad(synthetic_gamma_mhz), detunings, settings, base,
                                  config.workers);
    write_spectrum_csv(ctx.out_dir + "/measured_grid.csv", measured);
  } else {
    if (grid_csv.empty()) throw ConfigError("calibrate: provide --grid or --synthetic-gamma-mhz");
    measured = read_spectrum_csv(grid_csv);
  }

  std::vector<double> candidates(config.calib_n_candidates);
  for (int i = 0; i < config.calib_n_candidates; ++i)
    candidates[i] = mhz_to_rad(config.calib_gamma_lo_mhz +
                               (config.calib_gamma_hi_mhz - config.calib_gamma_lo_mhz) * i /
                                   (config.calib_n_candidates - 1));

  const GammaCalibration cal =
      calibrate_gamma(measured, candidates, settings.drive, base, config.workers);

  CsvTable curve;
  curve.header = {"gamma_mhz", "overlap_error"};
  for (size_t i = 0; i < cal.candidates.size(); ++i)
    curve.rows.push_back({rad_to_mhz(cal.candidates[i]), cal.errors[i]});
  write_csv(ctx.out_dir + "/error_curve.csv", curve);

  json report;
  report["gamma_est_mhz"] = rad_to_mhz(cal.gamma_est);
  report["gauss_c0"] = cal.gauss[0];
  report["gauss_c1"] = cal.gauss[1];
  report["gauss_mu_mhz"] = rad_to_mhz(cal.gauss[2]);
  report["gauss_sigma_mhz"] = rad_to_mhz(cal.gauss[3]);
  write_text_file(ctx.out_dir + "/estimate.json", report.dump(2) + "\n");

  std::vector<double> xs, ys;
  for (const auto& row : curve.rows) {
    xs.push_back(row[0]);
    ys.push_back(row[1]);
  }
  write_svg_chart(ctx.out_dir + "/error_curve.svg", "Cavity response calibration", "gamma (MHz)",
                  "overlap error", {{"error", xs, ys}});
  return 0;
}

int cmd_arise(const RunContext& ctx) {
  const RunConfig& config = ctx.config;
  ensure_out_dir(ctx.out_dir);
  write_manifest(ctx, "arise");

  const ProtonTable table = table_from_config(config);
  const SystemParams base = config.system_params();
  const CavityParams cav = config.cavity_params();
  const EnsembleSpec spec = config.ensemble_spec();
  const SolverOptions opts = config.solver_options();

  JsonlLog log(ctx.out_dir + "/record.jsonl");
  int fresh_evals = 0;
  LoggedFom fom = [&](const Pulse& pulse, IterationRecord& it) {
    return log.eval(it, [&] {
      ++fresh_evals;
      const FomResult res =
          evaluate_fom(pulse, spec, base, cav, config.n_shots, table, config.workers, opts);
      return FomValue{res.mean, res.std_err};
    });
  };

  std::vector<SweepSpec> step1;
  for (double dm : config.step1_delta_max_mhz)
    for (double dur : config.step1_duration_us)
      step1.push_back({mhz_to_rad(dm), dur, mhz_to_rad(config.step1_amplitude_mhz)});
  Step2Grid step2;
  step2.n_osc = config.step2_n_osc;
  step2.extra_tau = config.step2_tau_us;

  AriseResult result;
  try {
    result = arise(step1, step2, config.dcrab_config(), fom, config.pulse_dt_us);
  } catch (const DcrabAborted& err) {
    if (fresh_evals == 0 && err.partial.iterations.empty())
      throw BudgetError(std::string("no successful FoM evaluation: ") + err.what());
    throw SolverError(err.what());
  }

  write_pulse_csv(ctx.out_dir + "/best_pulse.csv", result.record.best_pulse);

  CsvTable conv;
  conv.header = {"index", "stage", "si", "eval", "fom", "fom_err", "best_fom"};
  std::vector<double> fom_series, best_series, idx_series;
  for (size_t i = 0; i < result.record.iterations.size(); ++i) {
    const auto& it = result.record.iterations[i];
    const double stage_code = it.stage == "step1" ? 1 : it.stage == "step2" ? 2 : 3;
    conv.rows.push_back({static_cast<double>(i), stage_code, static_cast<double>(it.super_idx),
                         static_cast<double>(it.eval_idx), it.fom, it.fom_err, it.best_fom});
    idx_series.push_back(static_cast<double>(i));
    fom_series.push_back(it.fom);
    best_series.push_back(it.best_fom);
  }
  write_csv(ctx.out_dir + "/convergence.csv", conv);
  write_svg_chart(ctx.out_dir + "/convergence.svg", "FoM over the optimization", "evaluation",
                  "FoM", {{"fom", idx_series, fom_series}, {"best", idx_series, best_series}});

  json winners;
  winners["step1"] = {{"delta_max_mhz", rad_to_mhz(result.step1_winner.delta_max)},
                      {"duration_us", result.step1_winner.duration},
                      {"amplitude_mhz", rad_to_mhz(result.step1_winner.amplitude)},
                      {"fom", result.step1_fom}};
  if (result.step2_winner) {
    winners["step2"] = {{"n_osc", result.step2_winner->n_osc},
                        {"tau_us", result.step2_winner->tau},
                        {"fom", result.step2_fom}};
  } else {
    winners["step2"] = {{"kept_step1", true}, {"fom", result.step2_fom}};
  }
  winners["final"] = {{"best_fom", result.record.best_fom},
                      {"best_err", result.record.best_err},
                      {"n_evaluations", result.record.iterations.size()}};
  write_text_file(ctx.out_dir + "/winners.json", winners.dump(2) + "\n");
  return 0;
}

int cmd_buildup(const RunContext& ctx, const std::vector<std::string>& sample_csvs) {
  const RunConfig& config = ctx.config;
  ensure_out_dir(ctx.out_dir);
  write_manifest(ctx, "buildup");
  if (sample_csvs.empty() || sample_csvs.size() > 2)
    throw ConfigError("buildup: provide one or two sample CSV files");

  const double gamma = 1.0 / config.t1_minutes;
  json report;
  std::vector<BuildupFit> fits;
  std::vector<PlotSeries> series;

  for (size_t c = 0; c < sample_csvs.size(); ++c) {
    const CsvTable table = read_csv(sample_csvs[c]);
    const int ct = table.col_index("t_min");
    const int cs = table.col_index("signal");
    if (ct < 0 || cs < 0)
      throw ConfigError("buildup CSV: expected columns t_min, signal in " + sample_csvs[c]);
    std::vector<double> t, p;
    for (const auto& row : table.rows) {
      t.push_back(row[ct]);
      p.push_back(row[cs]);
    }
    const BuildupFit fit = fit_buildup(t, p);
    fits.push_back(fit);

    json jf;
    jf["file"] = sample_csvs[c];
    jf["gamma_tilde_per_min"] = fit.gamma_tilde;
    jf["p_max"] = fit.p_max;
    jf["covariance"] = {{fit.covariance(0, 0), fit.covariance(0, 1)},
                        {fit.covariance(1, 0), fit.covariance(1, 1)}};
    const auto abs_pol = absolute_polarization(fit, gamma);
    jf["p_max_frac"] = abs_pol.fraction;
    jf["p_max_frac_err"] = abs_pol.err;
    jf["t_to_98pct_min"] = time_to_threshold(fit, 0.98 * fit.p_max);
    report["curves"].push_back(jf);

    series.push_back({"data " + std::to_string(c + 1), t, p});
    std::vector<double> model(t.size());
    for (size_t i = 0; i < t.size(); ++i)
      model[i] = fit.p_max * (1.0 - std::exp(-fit.gamma_tilde * t[i]));
    series.push_back({"fit " + std::to_string(c + 1), t, model});
  }

  if (fits.size() == 2) {
    const double level = config.threshold_fraction * fits[0].p_max;
    json cmp;
    cmp["threshold_level"] = level;
    cmp["threshold_fraction_of_first_pmax"] = config.threshold_fraction;
    bool reached_all = true;
    std::array<double, 2> times{0.0, 0.0};
    for (int c = 0; c < 2; ++c) {
      if (level >= fits[c].p_max) {
        cmp["t_curve" + std::to_string(c + 1) + "_min"] = "never reached";
        reached_all = false;
      } else {
        times[c] = time_to_threshold(fits[c], level);
        cmp["t_curve" + std::to_string(c + 1) + "_min"] = times[c];
      }
    }
    if (reached_all) cmp["time_ratio_first_over_second"] = times[0] / times[1];
    const auto paired1 = absolute_polarization_paired(fits[0], fits[1], gamma);
    const auto paired2 = absolute_polarization_paired(fits[1], fits[0], gamma);
    cmp["paired_p_max_frac_curve1"] = {{"value", paired1.fraction}, {"err", paired1.err}};
    cmp["paired_p_max_frac_curve2"] = {{"value", paired2.fraction}, {"err", paired2.err}};
    report["comparison"] = cmp;
  }

  write_text_file(ctx.out_dir + "/buildup_report.json", report.dump(2) + "\n");
  write_svg_chart(ctx.out_dir + "/buildup.svg", "Polarization build-up", "t (min)", "signal",
                  series);
  return 0;
}

int cmd_pulse_gen(const RunContext& ctx) {
  const RunConfig& config = ctx.config;
  ensure_out_dir(ctx.out_dir);
  write_manifest(ctx, "pulse-gen");
  const Pulse pulse = pulse_from_config(config);
  write_pulse_csv(ctx.out_dir + "/pulse.csv", pulse);

  std::vector<double> t(pulse.size()), amp(pulse.size()), det(pulse.size());
  const auto delta = pulse.detuning();
  for (int i = 0; i < pulse.size(); ++i) {
    t[i] = pulse.t(i);
    amp[i] = rad_to_mhz(pulse.omega_ext[i]);
    det[i] = rad_to_mhz(delta[i]);
  }
  write_svg_chart(ctx.out_dir + "/pulse.svg", "Pulse (" + config.pulse_family + ")", "t (us)",
                  "MHz", {{"amplitude", t, amp}, {"detuning", t, det}});
  return 0;
}

}  // namespace dnp
