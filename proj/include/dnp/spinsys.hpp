#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "dnp/units.hpp"

namespace dnp {

// Zero-field splitting and Zeeman parameters of the electron spin. Only
// the resonance frequency is derived from the full triplet Hamiltonian;
// the propagated model is the two-level {|0>,|1>} reduction plus a shelf.
struct ZeroFieldParams {
  double d = mhz_to_rad(1400.0);       // rad/us
  double e = mhz_to_rad(50.0);         // rad/us, carried but not propagated
  double gamma_s = kGammaElectron;     // rad/us per mT, signed
  double b0 = 230.0;                   // mT

  double omega_0s() const { return -gamma_s * b0; }
};

// Secular hyperfine row (electron S_z times nuclear I_x/I_y/I_z).
struct HyperfineTensor {
  double a_zx = 0.0;  // rad/us
  double a_zy = 0.0;
  double a_zz = 0.0;

  double norm() const;
};

struct DissipationRates {
  double gamma_el = 0.1;            // 1/us, electron dephasing
  double gamma_loss0 = 1.0 / 80.0;  // 1/us, |0> -> shelf
  double gamma_loss1 = 1.0 / 180.0; // 1/us, |1> -> shelf
};

struct SystemParams {
  ZeroFieldParams zfs;
  double omega_larmor = mhz_to_rad(9.2);     // rad/us
  std::vector<HyperfineTensor> couplings;    // one per nucleus, size 1..3
  double delta_es = 0.0;                     // rad/us, static electron detuning
  DissipationRates rates;
  std::array<double, 3> electron_init{1.0, 0.0, 0.0};  // (p0, p1, p_shelf)
  std::vector<double> nuclear_init_pol;      // per-nucleus <2 I_z>, empty = unpolarized

  int n_nuc() const { return static_cast<int>(couplings.size()); }
  int dim() const { return 3 * (1 << n_nuc()); }

  void validate() const;

  // Representative three-nucleus parameter set used when no coupling table
  // is supplied.
  static SystemParams defaults();
};

// omega_res = D - gamma_S * B0 (equivalently D + omega_0S with the signed
// electron gamma; evaluates to D + |gamma_S| B0 for the high-field line).
double resonance_frequency(const ZeroFieldParams& zfs);

using Matrix = Eigen::MatrixXcd;

Matrix kron(const Matrix& a, const Matrix& b);

// Electron operators on the 3-dimensional {|0>, |1>, |s>} space: spin-1/2
// on the first two levels, zero on the shelf.
Matrix electron_sx();
Matrix electron_sy();
Matrix electron_sz();

// Full-dimension nuclear operator (1/2)*sigma_axis on nucleus i (0-based),
// axis 0=x 1=y 2=z.
Matrix nuclear_op(int axis, int i, int n_nuc);

// Rotating-frame Hamiltonian (units rad/us, dim 3*2^n_nuc):
//   Re(W) Sx + Im(W) Sy + delta_es Sz + omega_L sum_i Iz_i
//   + sum_i Sz (a_zx Ix_i + a_zy Iy_i + a_zz Iz_i)
Matrix build_hamiltonian(const SystemParams& params, std::complex<double> omega_int);

// R1 = sqrt(gamma_el/2) Sz, R2 = sqrt(gamma_loss0) |s><0| x 1,
// R3 = sqrt(gamma_loss1) |s><1| x 1.
std::vector<Matrix> build_lindblad_ops(const DissipationRates& rates, int n_nuc);

}  // namespace dnp
