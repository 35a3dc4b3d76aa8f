#include "dnp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dnp/errors.hpp"

namespace dnp {

void DcrabConfig::validate() const {
  if (n_super < 1 || n_basis < 1) throw std::invalid_argument("dcrab: n_super, n_basis must be >= 1");
  if (!(freq_lo > 0.0) || !(freq_hi > freq_lo))
    throw std::invalid_argument("dcrab: need freq_hi > freq_lo > 0");
  if (n_channels() < 1) throw std::invalid_argument("dcrab: at least one control channel");
  if (max_fom_evals < 2 * n_basis * n_channels() + 2)
    throw std::invalid_argument("dcrab: budget must cover the initial simplex plus one step");
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& scale, int budget) {
  const int dim = static_cast<int>(x0.size());
  if (dim < 1) throw std::invalid_argument("nelder_mead: dimension must be >= 1");
  if (scale.size() != dim) throw std::invalid_argument("nelder_mead: scale size mismatch");

  NelderMeadResult result;
  result.n_evals = 0;

  // Internally minimize -f.
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw std::runtime_error("nelder_mead: non-finite objective value");
    ++result.n_evals;
    result.trace.push_back(v);
    return -v;
  };

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> fs;
  xs.push_back(x0);
  fs.push_back(eval(x0));
  for (int i = 0; i < dim && result.n_evals < budget; ++i) {
    Eigen::VectorXd v = x0;
    v(i) += scale(i);
    xs.push_back(v);
    fs.push_back(eval(v));
  }

  const double diam_tol = 1e-6 * scale.cwiseAbs().maxCoeff();
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  auto order = [&] {
    std::vector<int> idx(xs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> xs2(xs.size());
    std::vector<double> fs2(fs.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  auto diameter = [&] {
    double d = 0.0;
    for (size_t i = 1; i < xs.size(); ++i) d = std::max(d, (xs[i] - xs[0]).norm());
    return d;
  };

  // The simplex may be incomplete if the budget ran out during setup.
  while (result.n_evals < budget && xs.size() == static_cast<size_t>(dim) + 1) {
    order();
    if (diameter() < diam_tol) break;
    const int worst = dim;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) centroid += xs[i];
    centroid /= dim;

    const Eigen::VectorXd xr = centroid + kReflect * (centroid - xs[worst]);
    const double fr = eval(xr);
    if (fr < fs[0]) {
      if (result.n_evals >= budget) {
        if (fr < fs[worst]) { xs[worst] = xr; fs[worst] = fr; }
        break;
      }
      const Eigen::VectorXd xe = centroid + kExpand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) { xs[worst] = xe; fs[worst] = fe; }
      else { xs[worst] = xr; fs[worst] = fr; }
    } else if (fr < fs[worst - 1]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      if (result.n_evals >= budget) break;
      const bool outside = fr < fs[worst];
      const Eigen::VectorXd xc =
          outside ? Eigen::VectorXd(centroid + kContract * (xr - centroid))
                  : Eigen::VectorXd(centroid + kContract * (xs[worst] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        for (int i = 1; i <= dim && result.n_evals < budget; ++i) {
          xs[i] = xs[0] + kShrink * (xs[i] - xs[0]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }

  order();
  result.x_best = xs[0];
  result.f_best = -fs[0];
  return result;
}

OptimizationRecord dcrab_optimize(const Pulse& guess, const LoggedFom& fom,
                                  const DcrabConfig& config) {
  config.validate();
  guess.validate();

  OptimizationRecord record;
  record.best_pulse = guess;
  bool have_incumbent = false;

  Rng rng(config.seed);

  for (int si = 0; si < config.n_super; ++si) {
    // Fresh random basis for this super-iteration (per channel).
    const int n_ch = config.n_channels();
    std::vector<double> freqs(config.n_basis * n_ch);
    for (auto& w : freqs) w = rng.uniform(config.freq_lo, config.freq_hi);
    record.frequencies_per_si.push_back(freqs);

    const Pulse incumbent = record.best_pulse;
    const int dim = 2 * config.n_basis * n_ch;

    auto make_candidate = [&](const Eigen::VectorXd& x) {
      Pulse candidate = incumbent;
      int ch = 0;
      auto apply = [&](Channel target) {
        std::vector<FourierCoeff> cs(config.n_basis);
        for (int l = 0; l < config.n_basis; ++l) {
          cs[l].a = x(2 * (ch * config.n_basis + l));
          cs[l].b = x(2 * (ch * config.n_basis + l) + 1);
          cs[l].omega = freqs[ch * config.n_basis + l];
        }
        candidate = fourier_pulse(candidate, cs, target, config.freq_hi);
        ++ch;
      };
      if (config.use_phase) apply(Channel::phase);
      if (config.use_amplitude) apply(Channel::amplitude);
      return candidate;
    };

    int eval_idx = 0;
    auto objective = [&](const Eigen::VectorXd& x) {
      const Pulse candidate = make_candidate(x);
      IterationRecord it;
      it.stage = "dcrab";
      it.super_idx = si;
      it.eval_idx = eval_idx++;
      it.freqs = freqs;
      it.coeffs.assign(x.data(), x.data() + x.size());
      FomValue v;
      try {
        v = fom(candidate, it);
      } catch (const std::exception& err) {
        throw DcrabAborted(std::string("fom evaluation failed: ") + err.what(), record);
      }
      if (!std::isfinite(v.value))
        throw DcrabAborted("fom evaluation returned a non-finite value", record);
      it.fom = v.value;
      it.fom_err = v.err;
      const bool improves =
          !have_incumbent || v.value > record.best_fom + config.improve_threshold * v.err;
      if (improves) {
        record.best_fom = v.value;
        record.best_err = v.err;
        record.best_pulse = candidate;
        have_incumbent = true;
      }
      it.best_fom = record.best_fom;
      record.iterations.push_back(it);
      return v.value;
    };

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd scale(dim);
    int k = 0;
    if (config.use_phase)
      for (int l = 0; l < 2 * config.n_basis; ++l) scale(k++) = config.scale_phase;
    if (config.use_amplitude)
      for (int l = 0; l < 2 * config.n_basis; ++l) scale(k++) = config.scale_amplitude;

    nelder_mead(objective, x0, scale, config.max_fom_evals);
  }
  return record;
}

OptimizationRecord dcrab_optimize(const Pulse& guess, const FomEvaluator& fom,
                                  const DcrabConfig& config) {
  return dcrab_optimize(
      guess, [&fom](const Pulse& p, IterationRecord&) { return fom(p); }, config);
}

AriseResult arise(const std::vector<SweepSpec>& step1_grid, const Step2Grid& step2_grid,
                  const DcrabConfig& config, const LoggedFom& fom, double pulse_dt) {
  if (step1_grid.empty()) throw std::invalid_argument("arise: empty step-1 grid");
  if (step2_grid.n_osc.empty()) throw std::invalid_argument("arise: empty step-2 grid");

  AriseResult result;

  // Step 1: exhaustive linear-sweep parameter search.
  double best1 = -std::numeric_limits<double>::infinity();
  Pulse best1_pulse;
  int eval_idx = 0;
  for (const auto& spec : step1_grid) {
    const Pulse pulse = linear_sweep(spec, pulse_dt);
    IterationRecord it;
    it.stage = "step1";
    it.eval_idx = eval_idx++;
    it.coeffs = {spec.delta_max, spec.duration, spec.amplitude};
    const FomValue v = fom(pulse, it);
    it.fom = v.value;
    it.fom_err = v.err;
    if (v.value > best1) {
      best1 = v.value;
      best1_pulse = pulse;
      result.step1_winner = spec;
    }
    it.best_fom = best1;
    result.record.iterations.push_back(it);
  }
  result.step1_fom = best1;

  // Step 2: multi-sweeps seeded with the step-1 winner; the winner itself
  // stays in the comparison so the chain cannot regress.
  std::vector<double> taus = step2_grid.extra_tau;
  const double t_linear = result.step1_winner.duration;
  if (std::none_of(taus.begin(), taus.end(),
                   [&](double tau) { return std::abs(tau - t_linear) < 1e-12; }))
    taus.push_back(t_linear);

  double best2 = best1;
  Pulse best2_pulse = best1_pulse;
  eval_idx = 0;
  for (int n_osc : step2_grid.n_osc) {
    for (double tau : taus) {
      MultiSweepSpec spec{result.step1_winner.delta_max, n_osc, tau,
                          result.step1_winner.amplitude};
      const Pulse pulse = sinusoidal_sweep(spec, pulse_dt);
      IterationRecord it;
      it.stage = "step2";
      it.eval_idx = eval_idx++;
      it.coeffs = {static_cast<double>(n_osc), tau};
      const FomValue v = fom(pulse, it);
      it.fom = v.value;
      it.fom_err = v.err;
      if (v.value > best2) {
        best2 = v.value;
        best2_pulse = pulse;
        result.step2_winner = spec;
      }
      it.best_fom = best2;
      result.record.iterations.push_back(it);
    }
  }
  result.step2_fom = best2;
  result.step2_pulse = best2_pulse;

  // Step 3: closed-loop optimization from the multi-sweep winner.
  OptimizationRecord dcrab = dcrab_optimize(best2_pulse, fom, config);
  for (auto& it : dcrab.iterations) result.record.iterations.push_back(it);
  result.record.frequencies_per_si = dcrab.frequencies_per_si;
  result.record.best_pulse = dcrab.best_pulse;
  result.record.best_fom = dcrab.best_fom;
  result.record.best_err = dcrab.best_err;
  return result;
}

}  // namespace dnp
