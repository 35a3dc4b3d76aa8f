#include "dnp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dnp/errors.hpp"

namespace dnp {

using cplx = std::complex<double>;
static const cplx kI(0.0, 1.0);

namespace {

// I_z eigenvalue sign of nucleus `nucleus` in nuclear basis state j:
// +1 for bit 0 (spin up), -1 for bit 1. Nucleus 0 occupies the most
// significant bit, matching the Kronecker order in spinsys.
inline int iz_sign(int j, int nucleus, int n_nuc) {
  return ((j >> (n_nuc - 1 - nucleus)) & 1) ? -1 : 1;
}

// Block-structured right-hand side of the master equation for the
// electron{|0>,|1>,|s>} (x) nuclei system. The Hamiltonian splits into
// constant nuclear blocks b0/b1/bs plus the scalar drive coupling the
// first two blocks; the three dissipators act elementwise per block.
template <int NN>
class Engine {
 public:
  static constexpr int n = 1 << NN;
  static constexpr int dim = 3 * n;
  using Mat = Eigen::Matrix<cplx, dim, dim>;
  using Nuc = Eigen::Matrix<cplx, n, n>;

  explicit Engine(const SystemParams& params) {
    const Matrix h0 = build_hamiltonian(params, 0.0);
    b0_ = h0.block(0, 0, n, n);
    b1_ = h0.block(n, n, n, n);
    for (int j = 0; j < n; ++j) bs_(j) = h0(2 * n + j, 2 * n + j);
    g0_ = params.rates.gamma_loss0;
    g1_ = params.rates.gamma_loss1;
    const double gel = params.rates.gamma_el;
    gam01_ = gel / 4.0 + (g0_ + g1_) / 2.0;
    gam02_ = gel / 16.0 + g0_ / 2.0;
    gam12_ = gel / 16.0 + g1_ / 2.0;
  }

  void rhs(const Mat& rho, cplx w, Mat& out) const {
    const cplx wc = std::conj(w);
    const auto r00 = rho.template block<n, n>(0, 0);
    const auto r01 = rho.template block<n, n>(0, n);
    const auto r02 = rho.template block<n, n>(0, 2 * n);
    const auto r11 = rho.template block<n, n>(n, n);
    const auto r12 = rho.template block<n, n>(n, 2 * n);
    const auto r22 = rho.template block<n, n>(2 * n, 2 * n);

    // (0,0): -i[b0, r00] - i((wc/2) r01^+ - (w/2) r01) - g0 r00
    tmp_.noalias() = b0_ * r00;
    blk_ = tmp_ - tmp_.adjoint();
    blk_ += (0.5 * wc) * r01.adjoint() - (0.5 * w) * r01;
    out.template block<n, n>(0, 0) = -kI * blk_ - g0_ * r00;

    // (1,1)
    tmp_.noalias() = b1_ * r11;
    blk_ = tmp_ - tmp_.adjoint();
    blk_ += (0.5 * w) * r01 - (0.5 * wc) * r01.adjoint();
    out.template block<n, n>(n, n) = -kI * blk_ - g1_ * r11;

    // (0,1)
    blk_.noalias() = b0_ * r01;
    blk_.noalias() -= r01 * b1_;
    blk_ += (0.5 * wc) * (r11 - r00);
    out.template block<n, n>(0, n) = -kI * blk_ - gam01_ * r01;

    // (0,2): shelf block of H is diagonal
    blk_.noalias() = b0_ * r02;
    blk_ += (0.5 * wc) * r12;
    blk_ -= r02 * bs_.asDiagonal();
    out.template block<n, n>(0, 2 * n) = -kI * blk_ - gam02_ * r02;

    // (1,2)
    blk_.noalias() = b1_ * r12;
    blk_ += (0.5 * w) * r02;
    blk_ -= r12 * bs_.asDiagonal();
    out.template block<n, n>(n, 2 * n) = -kI * blk_ - gam12_ * r12;

    // (2,2): commutator of the diagonal shelf block plus loss feed
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        blk_(i, j) = -kI * (bs_(i) - bs_(j)) * r22(i, j);
    out.template block<n, n>(2 * n, 2 * n) = blk_ + g0_ * r00 + g1_ * r11;

    // lower blocks by Hermiticity of d(rho)/dt
    out.template block<n, n>(n, 0) = out.template block<n, n>(0, n).adjoint();
    out.template block<n, n>(2 * n, 0) = out.template block<n, n>(0, 2 * n).adjoint();
    out.template block<n, n>(2 * n, n) = out.template block<n, n>(n, 2 * n).adjoint();
  }

 private:
  Nuc b0_, b1_;
  Eigen::Matrix<cplx, n, 1> bs_;
  double g0_ = 0.0, g1_ = 0.0;
  double gam01_ = 0.0, gam02_ = 0.0, gam12_ = 0.0;
  mutable Nuc tmp_, blk_;
};

void check_state(const Eigen::MatrixXcd& rho, int dim) {
  if (rho.rows() != dim || rho.cols() != dim)
    throw std::invalid_argument("density matrix dimension does not match the system");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw SolverError("density matrix is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9)
    throw SolverError("density matrix does not have unit trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw SolverError("density matrix is not positive semidefinite");
}

template <int NN>
PropagationResult run_propagation(const DensityState& state, const FieldTrace& field,
                                  double t_final, const SystemParams& params, int n_out,
                                  const SolverOptions& opts) {
  using Mat = typename Engine<NN>::Mat;
  constexpr int dim = Engine<NN>::dim;
  constexpr int n = Engine<NN>::n;
  const int n_nuc = NN;

  const Engine<NN> engine(params);
  const double t0 = state.t;
  const double span = t_final - t0;
  if (span <= 0.0) throw std::invalid_argument("propagate: non-positive time span");

  Mat y = state.rho;
  // Dormand-Prince 5(4) with FSAL.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Mat k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;

  // The field trace runs on shot-local time (t - t0). The electron's
  // negative gyromagnetic ratio makes its physical rotating frame counter-
  // rotate relative to the cavity-signal convention, so the drive enters
  // the Hamiltonian conjugated; with this orientation an upward detuning
  // sweep pumps the nuclei toward positive <I_z>.
  auto field_at = [&](double t) { return std::conj(field.at(t - t0)); };

  PropagationResult result;
  auto& trace = result.trace;
  trace.p_nuc.resize(n_nuc);
  trace.t.resize(n_out);
  for (auto& v : trace.p_nuc) v.resize(n_out);
  trace.p_mean.resize(n_out);
  trace.pop0.resize(n_out);
  trace.pop1.resize(n_out);
  trace.pop_shelf.resize(n_out);

  auto record = [&](int idx, double t, const Mat& rho) {
    trace.t[idx] = t;
    double pops[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < n; ++j) pops[a] += rho(a * n + j, a * n + j).real();
    trace.pop0[idx] = pops[0];
    trace.pop1[idx] = pops[1];
    trace.pop_shelf[idx] = pops[2];
    double mean = 0.0;
    for (int i = 0; i < n_nuc; ++i) {
      double p = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int j = 0; j < n; ++j)
          p += iz_sign(j, i, n_nuc) * rho(a * n + j, a * n + j).real();
      trace.p_nuc[i][idx] = p;
      mean += p;
    }
    trace.p_mean[idx] = mean / n_nuc;
    if (std::abs(pops[0] + pops[1] + pops[2] - 1.0) > 1e-6)
      throw SolverError("trace drifted beyond tolerance at t=" + std::to_string(t));
    if (opts.check_positivity) {
      Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-6)
        throw SolverError("positivity violated at t=" + std::to_string(t));
    }
  };

  record(0, t0, y);
  engine.rhs(y, field_at(t0), k1);

  double t = t0;
  double h = std::min({opts.max_step, span / 10.0, 1e-3});
  const double h_min = 1e-12;
  int out_idx = 1;

  while (out_idx < n_out) {
    const double t_sample = t0 + span * out_idx / (n_out - 1);
    while (t < t_sample - 1e-12) {
      bool clipped = false;
      double step = h;
      if (t + step >= t_sample) {
        step = t_sample - t;
        clipped = true;
      }

      ytmp = y + (step * a21) * k1;
      engine.rhs(ytmp, field_at(t + c2 * step), k2);
      ytmp = y + step * (a31 * k1 + a32 * k2);
      engine.rhs(ytmp, field_at(t + c3 * step), k3);
      ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
      engine.rhs(ytmp, field_at(t + c4 * step), k4);
      ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      engine.rhs(ytmp, field_at(t + c5 * step), k5);
      ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      engine.rhs(ytmp, field_at(t + step), k6);
      ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      engine.rhs(ynew, field_at(t + step), k7);
      yerr = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err_sq = 0.0;
      for (int col = 0; col < dim; ++col)
        for (int row = 0; row < dim; ++row) {
          const double sc = opts.abs_tol +
                            opts.rel_tol * std::max(std::abs(y(row, col)), std::abs(ynew(row, col)));
          const double e = std::abs(yerr(row, col)) / sc;
          err_sq += e * e;
        }
      const double err = std::sqrt(err_sq / (dim * dim));

      if (err <= 1.0) {
        t += step;
        y.swap(ynew);
        k1.swap(k7);  // FSAL
        double fac = (err > 1e-12) ? 0.9 * std::pow(err, -0.2) : 5.0;
        fac = std::min(5.0, std::max(0.2, fac));
        if (!clipped) h = std::min(step * fac, opts.max_step);
        else h = std::min(h, opts.max_step);
      } else {
        double fac = std::max(0.1, 0.9 * std::pow(err, -0.2));
        h = step * std::min(fac, 0.9);
        if (h < h_min)
          throw SolverError("integrator step underflow at t=" + std::to_string(t));
      }
    }
    record(out_idx, t_sample, y);
    ++out_idx;
  }

  result.final_state.rho = y;
  result.final_state.t = t_final;
  return result;
}

}  // namespace

DensityState initial_state(const SystemParams& params) {
  params.validate();
  const int nn = params.n_nuc();
  Eigen::MatrixXcd nuc = Eigen::MatrixXcd::Identity(1, 1);
  for (int i = 0; i < nn; ++i) {
    const double p = params.nuclear_init_pol.empty() ? 0.0 : params.nuclear_init_pol[i];
    Eigen::MatrixXcd single = Eigen::MatrixXcd::Zero(2, 2);
    single(0, 0) = 0.5 * (1.0 + p);
    single(1, 1) = 0.5 * (1.0 - p);
    nuc = kron(nuc, single);
  }
  Eigen::MatrixXcd electron = Eigen::MatrixXcd::Zero(3, 3);
  for (int a = 0; a < 3; ++a) electron(a, a) = params.electron_init[a];
  DensityState state;
  state.rho = kron(electron, nuc);
  state.t = 0.0;
  return state;
}

PropagationResult propagate_field(const DensityState& state, const FieldTrace& field,
                                  double t_final, const SystemParams& params, int n_out,
                                  const SolverOptions& opts) {
  params.validate();
  if (n_out < 2) throw std::invalid_argument("propagate: n_out must be at least 2");
  check_state(state.rho, params.dim());
  switch (params.n_nuc()) {
    case 1: return run_propagation<1>(state, field, t_final, params, n_out, opts);
    case 2: return run_propagation<2>(state, field, t_final, params, n_out, opts);
    default: return run_propagation<3>(state, field, t_final, params, n_out, opts);
  }
}

PropagationResult propagate(const DensityState& state, const Pulse& pulse,
                            const SystemParams& params, const CavityParams& cav, int n_out,
                            const SolverOptions& opts) {
  if (pulse.duration() > 1000.0)
    throw std::invalid_argument("propagate: pulse exceeds the 1 ms shot window");
  const FieldTrace field = filter_pulse(pulse, cav, std::min(opts.field_dt, pulse.dt));
  return propagate_field(state, field, state.t + pulse.duration(), params, n_out, opts);
}

ShotSequence repeat_shots_field(const FieldTrace& field, double duration,
                                const SystemParams& params, int n_shots,
                                const SolverOptions& opts) {
  if (n_shots < 1) throw std::invalid_argument("repeat_shots: n_shots must be >= 1");
  ShotSequence shots;
  DensityState state = initial_state(params);
  for (int s = 0; s < n_shots; ++s) {
    auto result = propagate_field(state, field, duration, params, 2, opts);
    shots.p_mean.push_back(result.trace.p_mean.back());
    state = std::move(result.final_state);
    if (s + 1 < n_shots) {
      const Eigen::MatrixXcd nuc = trace_out_electron(state.rho, params.n_nuc());
      Eigen::MatrixXcd electron = Eigen::MatrixXcd::Zero(3, 3);
      for (int a = 0; a < 3; ++a) electron(a, a) = params.electron_init[a];
      state.rho = kron(electron, nuc);
      state.t = 0.0;
    }
  }
  shots.final_state = std::move(state);
  return shots;
}

ShotSequence repeat_shots(const Pulse& pulse, const SystemParams& params, const CavityParams& cav,
                          int n_shots, const SolverOptions& opts) {
  const FieldTrace field = filter_pulse(pulse, cav, std::min(opts.field_dt, pulse.dt));
  return repeat_shots_field(field, pulse.duration(), params, n_shots, opts);
}

HhWindow hh_window(const FieldTrace& field, double omega_larmor) {
  HhWindow window;
  window.t.resize(field.size());
  window.upper.resize(field.size());
  window.lower.resize(field.size());
  window.open.resize(field.size());
  for (int i = 0; i < field.size(); ++i) {
    window.t[i] = field.t(i);
    const double m = std::abs(field.omega_int[i]);
    const double gap = (omega_larmor - m) * (omega_larmor + m);
    if (gap >= -1e-12 * omega_larmor * omega_larmor) {
      const double b = std::sqrt(std::max(0.0, gap));
      window.upper[i] = b;
      window.lower[i] = -b;
      window.open[i] = true;
    } else {
      window.upper[i] = std::numeric_limits<double>::quiet_NaN();
      window.lower[i] = std::numeric_limits<double>::quiet_NaN();
      window.open[i] = false;
    }
  }
  return window;
}

double electron_population(const Eigen::MatrixXcd& rho, int level, int n_nuc) {
  const int n = 1 << n_nuc;
  double p = 0.0;
  for (int j = 0; j < n; ++j) p += rho(level * n + j, level * n + j).real();
  return p;
}

double nuclear_polarization(const Eigen::MatrixXcd& rho, int nucleus, int n_nuc) {
  const int n = 1 << n_nuc;
  double p = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < n; ++j)
      p += iz_sign(j, nucleus, n_nuc) * rho(a * n + j, a * n + j).real();
  return p;
}

Eigen::MatrixXcd trace_out_electron(const Eigen::MatrixXcd& rho, int n_nuc) {
  const int n = 1 << n_nuc;
  Eigen::MatrixXcd nuc = Eigen::MatrixXcd::Zero(n, n);
  for (int a = 0; a < 3; ++a) nuc += rho.block(a * n, a * n, n, n);
  return nuc;
}

}  // namespace dnp
