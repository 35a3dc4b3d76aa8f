#include "dnp/spinsys.hpp"

#include <cmath>
#include <stdexcept>

namespace dnp {

double HyperfineTensor::norm() const { return std::sqrt(a_zx * a_zx + a_zy * a_zy + a_zz * a_zz); }

void SystemParams::validate() const {
  if (n_nuc() < 1 || n_nuc() > 3)
    throw std::invalid_argument("system: number of nuclei must be 1, 2 or 3");
  if (!(zfs.d > 0.0)) throw std::invalid_argument("system: D must be positive");
  if (!(zfs.b0 > 0.0)) throw std::invalid_argument("system: B0 must be positive");
  if (!(omega_larmor > 0.0)) throw std::invalid_argument("system: omega_larmor must be positive");
  if (rates.gamma_el < 0.0 || rates.gamma_loss0 < 0.0 || rates.gamma_loss1 < 0.0)
    throw std::invalid_argument("system: dissipation rates must be non-negative");
  double sum = 0.0;
  for (double p : electron_init) {
    if (p < 0.0) throw std::invalid_argument("system: electron populations must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("system: electron populations must sum to 1");
  if (!nuclear_init_pol.empty() && nuclear_init_pol.size() != couplings.size())
    throw std::invalid_argument("system: nuclear_init_pol size must match couplings");
  for (double p : nuclear_init_pol)
    if (std::abs(p) > 1.0) throw std::invalid_argument("system: nuclear polarization outside [-1,1]");
}

SystemParams SystemParams::defaults() {
  SystemParams p;
  p.couplings = {
      {mhz_to_rad(1.2), 0.0, mhz_to_rad(2.0)},
      {mhz_to_rad(0.8), mhz_to_rad(0.3), mhz_to_rad(-1.1)},
      {mhz_to_rad(0.4), mhz_to_rad(-0.2), mhz_to_rad(0.6)},
  };
  return p;
}

double resonance_frequency(const ZeroFieldParams& zfs) { return zfs.d - zfs.gamma_s * zfs.b0; }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {
const std::complex<double> kI(0.0, 1.0);

Matrix pauli(int axis) {
  Matrix s(2, 2);
  switch (axis) {
    case 0: s << 0, 1, 1, 0; break;
    case 1: s << 0, -kI, kI, 0; break;
    default: s << 1, 0, 0, -1; break;
  }
  return s;
}
}  // namespace

Matrix electron_sx() {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 1) = s(1, 0) = 0.5;
  return s;
}

Matrix electron_sy() {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 1) = -0.5 * kI;
  s(1, 0) = 0.5 * kI;
  return s;
}

Matrix electron_sz() {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 0) = 0.5;
  s(1, 1) = -0.5;
  return s;
}

Matrix nuclear_op(int axis, int i, int n_nuc) {
  Matrix op = Matrix::Identity(1, 1);
  for (int k = 0; k < n_nuc; ++k) {
    const Matrix factor = (k == i) ? Matrix(0.5 * pauli(axis)) : Matrix(Matrix::Identity(2, 2));
    op = kron(op, factor);
  }
  return op;
}

Matrix build_hamiltonian(const SystemParams& params, std::complex<double> omega_int) {
  params.validate();
  if (!std::isfinite(omega_int.real()) || !std::isfinite(omega_int.imag()))
    throw std::invalid_argument("build_hamiltonian: non-finite drive");

  const int nn = params.n_nuc();
  const int nuc_dim = 1 << nn;
  const Matrix id_nuc = Matrix::Identity(nuc_dim, nuc_dim);
  const Matrix id3 = Matrix::Identity(3, 3);

  Matrix h = omega_int.real() * kron(electron_sx(), id_nuc) +
             omega_int.imag() * kron(electron_sy(), id_nuc) +
             params.delta_es * kron(electron_sz(), id_nuc);
  Matrix nuc_part = Matrix::Zero(nuc_dim, nuc_dim);
  Matrix hf_part = Matrix::Zero(nuc_dim, nuc_dim);
  for (int i = 0; i < nn; ++i) {
    nuc_part += params.omega_larmor * nuclear_op(2, i, nn);
    const auto& a = params.couplings[i];
    hf_part += a.a_zx * nuclear_op(0, i, nn) + a.a_zy * nuclear_op(1, i, nn) +
               a.a_zz * nuclear_op(2, i, nn);
  }
  h += kron(id3, nuc_part) + kron(electron_sz(), hf_part);
  return h;
}

std::vector<Matrix> build_lindblad_ops(const DissipationRates& rates, int n_nuc) {
  if (n_nuc < 1 || n_nuc > 3) throw std::invalid_argument("build_lindblad_ops: bad nucleus count");
  const int nuc_dim = 1 << n_nuc;
  const Matrix id_nuc = Matrix::Identity(nuc_dim, nuc_dim);

  Matrix shelf0 = Matrix::Zero(3, 3);
  shelf0(2, 0) = 1.0;
  Matrix shelf1 = Matrix::Zero(3, 3);
  shelf1(2, 1) = 1.0;

  return {
      std::sqrt(rates.gamma_el / 2.0) * kron(electron_sz(), id_nuc),
      std::sqrt(rates.gamma_loss0) * kron(shelf0, id_nuc),
      std::sqrt(rates.gamma_loss1) * kron(shelf1, id_nuc),
  };
}

}  // namespace dnp
