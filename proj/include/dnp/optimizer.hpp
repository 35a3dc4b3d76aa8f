#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dnp/pulse.hpp"
#include "dnp/rng.hpp"

namespace dnp {

struct FomValue {
  double value = 0.0;
  double err = 0.0;
};

struct DcrabConfig {
  int n_super = 5;
  int n_basis = 3;
  double freq_lo = mhz_to_rad(0.01);  // rad/us
  double freq_hi = mhz_to_rad(2.0);
  bool use_phase = true;
  bool use_amplitude = false;
  int max_fom_evals = 120;  // per super-iteration
  double scale_phase = 1.0;          // rad, initial simplex extent
  double scale_amplitude = mhz_to_rad(1.0);
  double improve_threshold = 1.0;  // incumbent must be beaten by this many fom_err
  std::uint64_t seed = 0;

  int n_channels() const { return (use_phase ? 1 : 0) + (use_amplitude ? 1 : 0); }
  void validate() const;
};

// One figure-of-merit evaluation as recorded in the optimization log.
// Grid stages store their swept parameters in `coeffs`.
struct IterationRecord {
  std::string stage;  // "step1" | "step2" | "dcrab"
  int super_idx = 0;
  int eval_idx = 0;
  std::vector<double> freqs;   // rad/us, basis frequencies of this super-iteration
  std::vector<double> coeffs;  // Fourier coefficients (or grid parameters)
  double fom = 0.0;
  double fom_err = 0.0;
  double best_fom = 0.0;  // best-so-far after this evaluation
};

struct OptimizationRecord {
  std::vector<IterationRecord> iterations;
  std::vector<std::vector<double>> frequencies_per_si;
  Pulse best_pulse;
  double best_fom = 0.0;
  double best_err = 0.0;
};

// Black-box evaluator. The IterationRecord carries the candidate metadata;
// implementations may replay stored results (crash-safe resumption) or
// delegate to the simulator and append to a log.
using LoggedFom = std::function<FomValue(const Pulse&, IterationRecord&)>;
using FomEvaluator = std::function<FomValue(const Pulse&)>;

struct NelderMeadResult {
  Eigen::VectorXd x_best;
  double f_best = 0.0;
  int n_evals = 0;
  std::vector<double> trace;  // f value per evaluation
};

// Maximizes f with the standard simplex moves (reflection 1, expansion 2,
// contractions 0.5, shrink 0.5). The initial simplex is x0 plus scale[i]
// along each axis; stops on the evaluation budget or when the simplex
// diameter falls below 1e-6 of the largest scale.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& scale, int budget);

// Thrown when the evaluator fails mid-run; carries everything recorded so far.
struct DcrabAborted : std::runtime_error {
  DcrabAborted(const std::string& msg, OptimizationRecord rec)
      : std::runtime_error(msg), partial(std::move(rec)) {}
  OptimizationRecord partial;
};

// Random-basis Fourier super-iterations with a Nelder-Mead inner search.
// Every super-iteration draws n_basis frequencies per channel, optimizes
// the sin/cos coefficients starting from the zero vector (the incumbent
// pulse), and carries the best pulse forward. Pulse length never changes.
OptimizationRecord dcrab_optimize(const Pulse& guess, const LoggedFom& fom, const DcrabConfig& config);
OptimizationRecord dcrab_optimize(const Pulse& guess, const FomEvaluator& fom,
                                  const DcrabConfig& config);

struct Step2Grid {
  std::vector<int> n_osc;
  std::vector<double> extra_tau;  // us; the step-1 winner duration is always included
};

struct AriseResult {
  SweepSpec step1_winner{};
  double step1_fom = 0.0;
  std::optional<MultiSweepSpec> step2_winner;  // empty when the sweep itself won
  double step2_fom = 0.0;
  Pulse step2_pulse;
  OptimizationRecord record;  // step-3 record; iterations include all stages
};

// Three-step protocol: exhaustive sweep-parameter search, multi-sweep
// search seeded with the winner, then dCRAB from the multi-sweep winner.
AriseResult arise(const std::vector<SweepSpec>& step1_grid, const Step2Grid& step2_grid,
                  const DcrabConfig& config, const LoggedFom& fom, double pulse_dt);

}  // namespace dnp
