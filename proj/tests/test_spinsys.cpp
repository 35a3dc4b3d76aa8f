#include <doctest.h>

#include <cmath>

#include "dnp/rng.hpp"
#include "dnp/spinsys.hpp"
#include "oracles.hpp"

using namespace dnp;

TEST_CASE("resonance_frequency") {
  SUBCASE("all terms vanish") {
    ZeroFieldParams zfs;
    zfs.d = 0.0;
    zfs.b0 = 0.0;
    CHECK(resonance_frequency(zfs) == 0.0);
  }

  SUBCASE("no Zeeman term") {
    ZeroFieldParams zfs;
    zfs.d = mhz_to_rad(1400.0);
    zfs.gamma_s = 0.0;
    CHECK(resonance_frequency(zfs) == zfs.d);
  }

  SUBCASE("high-field line at D + |gamma_S| B0") {
    // gamma_S * B0 = -2pi*6440 rad/us -> omega_res = 2pi*7840 rad/us
    ZeroFieldParams zfs;
    zfs.d = mhz_to_rad(1400.0);
    zfs.b0 = 230.0;
    zfs.gamma_s = mhz_to_rad(-6440.0) / zfs.b0;
    CHECK(resonance_frequency(zfs) == doctest::Approx(mhz_to_rad(7840.0)).epsilon(1e-12));
    CHECK(zfs.omega_0s() == doctest::Approx(mhz_to_rad(6440.0)).epsilon(1e-12));
  }

  SUBCASE("defaults land near the 230 mT high-field transition") {
    ZeroFieldParams zfs;
    CHECK(rad_to_mhz(resonance_frequency(zfs)) == doctest::Approx(7845.7).epsilon(1e-3));
  }
}

TEST_CASE("build_hamiltonian") {
  SUBCASE("all terms zero gives the zero operator") {
    SystemParams p = SystemParams::defaults();
    p.couplings = {{0, 0, 0}};
    p.delta_es = 0.0;
    p.omega_larmor = 1e-300;  // validator wants > 0
    const Matrix h = build_hamiltonian(p, 0.0);
    CHECK(h.cwiseAbs().maxCoeff() < 1e-200);
  }

  SUBCASE("no drive, no coupling: diagonal with delta_es*m_s + omega_L*sum(m_i)") {
    SystemParams p = SystemParams::defaults();
    p.couplings = {{0, 0, 0}, {0, 0, 0}};
    p.delta_es = mhz_to_rad(3.0);
    const Matrix h = build_hamiltonian(p, 0.0);
    CHECK((h - Matrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
    // basis (electron, n1, n2); m_s = +-1/2 on the first two electron levels
    const double wl = p.omega_larmor;
    const double ms[3] = {0.5, -0.5, 0.0};
    for (int e = 0; e < 3; ++e)
      for (int j = 0; j < 4; ++j) {
        const double mi = (j & 2 ? -0.5 : 0.5) + (j & 1 ? -0.5 : 0.5);
        const double expected = (e < 2 ? p.delta_es * ms[e] : 0.0) + wl * mi;
        CHECK(h(e * 4 + j, e * 4 + j).real() == doctest::Approx(expected).epsilon(1e-12));
      }
  }

  SUBCASE("matches the hand-built 6x6 Kronecker construction element by element") {
    SystemParams p = SystemParams::defaults();
    p.couplings = {{mhz_to_rad(1.3), mhz_to_rad(-0.4), mhz_to_rad(2.1)}};
    p.delta_es = mhz_to_rad(-2.0);
    const std::complex<double> omega(mhz_to_rad(4.0), mhz_to_rad(1.5));
    const Matrix h = build_hamiltonian(p, omega);
    const oracle::Mat ref = oracle::hamiltonian_1nuc(omega, p.delta_es, p.omega_larmor,
                                                     p.couplings[0].a_zx, p.couplings[0].a_zy,
                                                     p.couplings[0].a_zz);
    REQUIRE(h.rows() == 6);
    CHECK((h - ref).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("rejects nucleus counts outside 1..3") {
    SystemParams p = SystemParams::defaults();
    p.couplings.clear();
    CHECK_THROWS_AS(build_hamiltonian(p, 0.0), std::invalid_argument);
    p.couplings.assign(4, HyperfineTensor{1, 1, 1});
    CHECK_THROWS_AS(build_hamiltonian(p, 0.0), std::invalid_argument);
  }
}

TEST_CASE("build_hamiltonian structural invariants") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    SystemParams p = SystemParams::defaults();
    const int nn = 1 + static_cast<int>(rng.uniform_int(3));
    p.couplings.clear();
    for (int i = 0; i < nn; ++i)
      p.couplings.push_back({mhz_to_rad(rng.uniform(-3, 3)), mhz_to_rad(rng.uniform(-3, 3)),
                             mhz_to_rad(rng.uniform(-3, 3))});
    p.delta_es = mhz_to_rad(rng.uniform(-20, 20));
    const std::complex<double> omega(mhz_to_rad(rng.uniform(0, 19)), mhz_to_rad(rng.uniform(-5, 5)));
    const Matrix h = build_hamiltonian(p, omega);
    const int n = 1 << nn;

    // Hermitian to machine precision
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

    // shelf block decouples from the driven subspace
    CHECK(h.block(2 * n, 0, n, 2 * n).cwiseAbs().maxCoeff() == 0.0);
    CHECK(h.block(0, 2 * n, 2 * n, n).cwiseAbs().maxCoeff() == 0.0);

    // sum R^+R commutes with total nuclear I_z
    Matrix jz = Matrix::Zero(3 * n, 3 * n);
    for (int i = 0; i < nn; ++i)
      jz += kron(Matrix::Identity(3, 3), nuclear_op(2, i, nn));
    Matrix rr = Matrix::Zero(3 * n, 3 * n);
    for (const auto& r : build_lindblad_ops(p.rates, nn)) rr += r.adjoint() * r;
    CHECK((rr * jz - jz * rr).cwiseAbs().maxCoeff() < 1e-12);

    // zero couplings: H commutes with every individual I_z
    SystemParams pz = p;
    for (auto& c : pz.couplings) c = {0, 0, 0};
    const Matrix hz = build_hamiltonian(pz, omega);
    for (int i = 0; i < nn; ++i) {
      const Matrix izi = kron(Matrix::Identity(3, 3), nuclear_op(2, i, nn));
      CHECK((hz * izi - izi * hz).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("build_lindblad_ops") {
  SUBCASE("zero rates give zero operators") {
    DissipationRates rates{0.0, 0.0, 0.0};
    for (const auto& r : build_lindblad_ops(rates, 2)) CHECK(r.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("loss operator norm squared equals the rate") {
    DissipationRates rates;
    const auto ops = build_lindblad_ops(rates, 1);
    // R2 = sqrt(1/80) |s><0| (x) 1: the only distinct nonzero singular
    // value squared is 1/80 (multiplicity = nuclear dimension)
    Eigen::JacobiSVD<Matrix> svd(ops[1]);
    CHECK(svd.singularValues()(0) * svd.singularValues()(0) == doctest::Approx(1.0 / 80.0));
    for (int k = 0; k < svd.singularValues().size(); ++k) {
      const double s = svd.singularValues()(k);
      CHECK((std::abs(s) < 1e-12 || s == doctest::Approx(svd.singularValues()(0))));
    }
    CHECK(svd.singularValues()(1) == doctest::Approx(svd.singularValues()(0)));
    CHECK(std::abs(svd.singularValues()(2)) < 1e-12);
  }

  SUBCASE("defaults carry the measured decay times") {
    DissipationRates rates;
    CHECK(rates.gamma_el == doctest::Approx(0.1));
    CHECK(rates.gamma_loss0 == doctest::Approx(1.0 / 80.0));
    CHECK(rates.gamma_loss1 == doctest::Approx(1.0 / 180.0));
  }
}
