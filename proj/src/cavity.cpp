#include "dnp/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dnp/csv.hpp"
#include "dnp/errors.hpp"
#include "dnp/nlls.hpp"
#include "dnp/parallel.hpp"
#include "dnp/solver.hpp"

namespace dnp {

using cplx = std::complex<double>;

cplx FieldTrace::at(double time) const {
  if (omega_int.empty()) return 0.0;
  const double x = time / dt;
  if (x <= 0.0) return omega_int.front();
  if (x >= size() - 1) return omega_int.back();
  const int i = static_cast<int>(x);
  const double frac = x - i;
  return omega_int[i] + frac * (omega_int[i + 1] - omega_int[i]);
}

// (1 - e^{-z}) / a with a series fallback for small |z|, z = a*h.
static cplx phi1(cplx a, double h) {
  const cplx z = a * h;
  if (std::abs(z) < 1e-6) return h * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0);
  return (1.0 - std::exp(-z)) / a;
}

FieldTrace filter_pulse(const Pulse& pulse, const CavityParams& cav, double dt_out) {
  pulse.validate();
  if (dt_out <= 0.0) throw std::invalid_argument("filter_pulse: dt_out must be positive");
  const double total = pulse.duration();
  const int n_out = static_cast<int>(std::floor(total / dt_out + 1e-9)) + 1;

  FieldTrace out;
  out.dt = dt_out;
  out.omega_int.resize(n_out);
  out.omega_int[0] = 0.0;

  const cplx a(cav.gamma_cav, cav.delta_cs);
  cplx w = 0.0;
  double t = 0.0;
  int next_out = 1;
  int seg = 0;  // pulse interval index

  auto drive_at = [&](int j) { return pulse.drive(j); };

  while (next_out < n_out) {
    const double t_target = next_out * dt_out;
    // advance through pulse intervals, splitting at output times
    while (t < t_target - 1e-15) {
      while (seg + 1 < pulse.size() - 1 && pulse.t(seg + 1) <= t + 1e-15) ++seg;
      const double seg_end = std::min(pulse.t(seg + 1), t_target);
      const double h = seg_end - t;
      if (h <= 0.0) break;
      const cplx d0 = drive_at(seg), d1 = drive_at(seg + 1);
      const double local = (t - pulse.t(seg)) / pulse.dt;
      const cplx slope = (d1 - d0) / pulse.dt;
      const cplx dstart = d0 + slope * (local * pulse.dt);
      const cplx i0 = phi1(a, h);
      const cplx i1 = (h - i0) / a;
      w = std::exp(-a * h) * w + cav.gamma_cav * (dstart * i0 + slope * i1);
      t = seg_end;
    }
    out.omega_int[next_out++] = w;
  }
  return out;
}

cplx cavity_steady_state(double omega_ext, double phi, const CavityParams& cav) {
  const cplx drive = omega_ext * std::exp(cplx(0.0, -phi));
  return cav.gamma_cav * drive / cplx(cav.gamma_cav, cav.delta_cs);
}

// One-sided magnitude spectrum of the mean-subtracted signal.
static std::vector<double> dft_magnitude(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  std::vector<double> mag(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    cplx acc = 0.0;
    for (int j = 0; j < n; ++j)
      acc += (x[j] - mean) * std::exp(cplx(0.0, -kTwoPi * j * k / n));
    mag[k] = std::abs(acc);
  }
  return mag;
}

SpectrumGrid simulate_rabi_grid(double gamma_cav, const std::vector<double>& detunings,
                                const RabiGridSettings& settings, const SystemParams& params,
                                int n_workers) {
  if (detunings.empty()) throw std::invalid_argument("simulate_rabi_grid: empty detuning list");
  if (settings.n_time < 4) throw std::invalid_argument("simulate_rabi_grid: too few samples");

  // Calibration drives the bare electron: a single decoupled nucleus keeps
  // the Hilbert space valid while the population signal is unaffected.
  SystemParams calib = params;
  calib.couplings = {HyperfineTensor{}};
  calib.nuclear_init_pol.clear();
  calib.delta_es = 0.0;
  calib.validate();

  const int n = settings.n_time;
  const double dt = settings.t_max / (n - 1);

  SpectrumGrid grid;
  grid.t_max_us = settings.t_max;
  grid.n_time = n;
  grid.detuning_mhz.resize(detunings.size());
  for (size_t i = 0; i < detunings.size(); ++i) grid.detuning_mhz[i] = rad_to_mhz(detunings[i]);
  grid.freq_mhz.resize(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) grid.freq_mhz[k] = k / (n * dt);
  grid.mag.resize(detunings.size());

  // Constant external drive, phase 0.
  Pulse drive;
  drive.dt = 1e-3;
  const int np = static_cast<int>(std::llround(settings.t_max / drive.dt)) + 1;
  drive.omega_ext.assign(np, settings.drive);
  drive.phi_ext.assign(np, 0.0);
  drive.omega_max = std::max(kMaxRabi, settings.drive);

  parallel_for(static_cast<int>(detunings.size()), n_workers, [&](int di) {
    const CavityParams cav{gamma_cav, detunings[di]};
    const FieldTrace field = filter_pulse(drive, cav, drive.dt);
    SolverOptions opts;
    opts.rel_tol = 1e-8;
    opts.abs_tol = 1e-10;
    opts.check_positivity = false;
    const auto res = propagate_field(initial_state(calib), field, settings.t_max, calib, n, opts);
    grid.mag[di] = dft_magnitude(res.trace.pop0);
  });
  return grid;
}

static double grid_overlap_error(const SpectrumGrid& a, const SpectrumGrid& b) {
  if (a.mag.size() != b.mag.size() || a.freq_mhz.size() != b.freq_mhz.size())
    throw std::invalid_argument("calibrate_gamma: grid shape mismatch");
  double sum_a = 0.0, sum_b = 0.0;
  for (size_t i = 0; i < a.mag.size(); ++i)
    for (size_t k = 0; k < a.mag[i].size(); ++k) {
      sum_a += a.mag[i][k];
      sum_b += b.mag[i][k];
    }
  if (sum_a <= 0.0 || sum_b <= 0.0) throw std::invalid_argument("calibrate_gamma: empty spectrum");
  double err = 0.0;
  for (size_t i = 0; i < a.mag.size(); ++i)
    for (size_t k = 0; k < a.mag[i].size(); ++k)
      err += std::abs(a.mag[i][k] / sum_a - b.mag[i][k] / sum_b);
  return err;
}

GammaCalibration calibrate_gamma(const SpectrumGrid& measured, const std::vector<double>& candidates,
                                 double drive, const SystemParams& params, int n_workers) {
  if (candidates.size() < 4)
    throw std::invalid_argument("calibrate_gamma: need at least 4 candidates for the Gaussian fit");

  std::vector<double> detunings(measured.detuning_mhz.size());
  for (size_t i = 0; i < detunings.size(); ++i) detunings[i] = mhz_to_rad(measured.detuning_mhz[i]);

  RabiGridSettings settings;
  settings.t_max = measured.t_max_us;
  settings.n_time = measured.n_time;
  settings.drive = drive;

  GammaCalibration out;
  out.candidates = candidates;
  out.errors.resize(candidates.size());
  for (size_t c = 0; c < candidates.size(); ++c) {
    const SpectrumGrid sim = simulate_rabi_grid(candidates[c], detunings, settings, params, n_workers);
    out.errors[c] = grid_overlap_error(measured, sim);
  }

  // error(g) ~ c0 - c1 exp(-(g - mu)^2 / (2 s^2)), least squares.
  const int argmin = static_cast<int>(std::min_element(out.errors.begin(), out.errors.end()) -
                                      out.errors.begin());
  const double span = candidates.back() - candidates.front();
  Eigen::VectorXd x0(4);
  x0 << *std::max_element(out.errors.begin(), out.errors.end()),
      *std::max_element(out.errors.begin(), out.errors.end()) - out.errors[argmin],
      candidates[argmin], span / 4.0;

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
      const double dg = candidates[i] - p(2);
      r(i) = out.errors[i] - (p(0) - p(1) * std::exp(-dg * dg / (2.0 * p(3) * p(3))));
    }
    return r;
  };
  const auto fit = levenberg_marquardt(residuals, x0, {});
  if (!fit.converged) throw FitError("calibrate_gamma: Gaussian fit did not converge");
  out.gauss = {fit.params(0), fit.params(1), fit.params(2), std::abs(fit.params(3))};
  out.gamma_est = fit.params(2);
  return out;
}

SpectrumGrid read_spectrum_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.n_cols() < 3) throw ConfigError("spectrum CSV: too few columns");
  SpectrumGrid grid;
  for (int k = 1; k < table.n_cols(); ++k) grid.freq_mhz.push_back(std::stod(table.header[k]));
  for (const auto& row : table.rows) {
    grid.detuning_mhz.push_back(row[0]);
    grid.mag.emplace_back(row.begin() + 1, row.end());
  }
  const int nf = static_cast<int>(grid.freq_mhz.size());
  grid.n_time = 2 * (nf - 1);
  const double df = grid.freq_mhz[1] - grid.freq_mhz[0];
  const double dt = 1.0 / (df * grid.n_time);
  grid.t_max_us = (grid.n_time - 1) * dt;
  return grid;
}

void write_spectrum_csv(const std::string& path, const SpectrumGrid& grid) {
  CsvTable table;
  table.header.push_back("delta_cs_mhz");
  for (double f : grid.freq_mhz) table.header.push_back(format_g12(f));
  for (size_t i = 0; i < grid.detuning_mhz.size(); ++i) {
    std::vector<double> row;
    row.push_back(grid.detuning_mhz[i]);
    row.insert(row.end(), grid.mag[i].begin(), grid.mag[i].end());
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

}  // namespace dnp
