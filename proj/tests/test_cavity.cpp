#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>

#include "dnp/cavity.hpp"
#include "dnp/csv.hpp"
#include "dnp/errors.hpp"
#include "dnp/rng.hpp"

using namespace dnp;
using cplx = std::complex<double>;

namespace {

Pulse constant_pulse(double amp, double duration, double dt = 1e-3) {
  Pulse p;
  p.dt = dt;
  const int n = static_cast<int>(std::llround(duration / dt)) + 1;
  p.omega_ext.assign(n, amp);
  p.phi_ext.assign(n, 0.0);
  return p;
}

// Pulse representing a complex drive trace (amplitude/unwrapped phase).
Pulse pulse_from_drive(const std::vector<cplx>& drive, double dt) {
  Pulse p;
  p.dt = dt;
  double prev_arg = 0.0;
  for (const cplx& d : drive) {
    p.omega_ext.push_back(std::abs(d));
    double a = -std::arg(d);
    while (a - prev_arg > M_PI) a -= 2.0 * M_PI;
    while (a - prev_arg < -M_PI) a += 2.0 * M_PI;
    p.phi_ext.push_back(a);
    prev_arg = a;
  }
  return p;
}

}  // namespace

TEST_CASE("filter_pulse closed forms") {
  const CavityParams cav{mhz_to_rad(9.24), 0.0};

  SUBCASE("zero drive stays zero") {
    const FieldTrace f = filter_pulse(constant_pulse(0.0, 2.0), cav, 1e-3);
    for (const auto& w : f.omega_int) CHECK(std::abs(w) == 0.0);
  }

  SUBCASE("constant drive follows 1 - exp(-gamma t) to below 1e-6") {
    const double amp = mhz_to_rad(10.0);
    const FieldTrace f = filter_pulse(constant_pulse(amp, 1.0), cav, 1e-3);
    for (int i = 0; i < f.size(); ++i) {
      const double expected = amp * (1.0 - std::exp(-cav.gamma_cav * f.t(i)));
      if (expected > 1e-6 * amp)
        CHECK(std::abs(f.omega_int[i].real() - expected) / expected < 1e-6);
      CHECK(std::abs(f.omega_int[i].imag()) < 1e-9 * amp);
    }
  }

  SUBCASE("detuned steady state: |W| = amp/sqrt(2), phase -pi/4 at delta = gamma") {
    const double amp = mhz_to_rad(10.0);
    const CavityParams det{mhz_to_rad(9.24), mhz_to_rad(9.24)};
    const FieldTrace f = filter_pulse(constant_pulse(amp, 2.0), det, 1e-3);
    const cplx w = f.omega_int.back();
    CHECK(std::abs(w) == doctest::Approx(amp / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(std::arg(w) == doctest::Approx(-M_PI / 4.0).epsilon(1e-6));
  }
}

TEST_CASE("cavity_steady_state") {
  SUBCASE("resonant cavity passes the drive through") {
    const CavityParams cav{mhz_to_rad(9.24), 0.0};
    CHECK(cavity_steady_state(3.0, 0.0, cav) == cplx(3.0, 0.0));
  }

  SUBCASE("magnitude bound far off resonance") {
    const CavityParams cav{mhz_to_rad(9.24), mhz_to_rad(92.4)};
    CHECK(std::abs(cavity_steady_state(1.0, 0.0, cav)) < 0.1);
  }

  SUBCASE("gamma = delta gives 1/sqrt(2)") {
    const CavityParams cav{mhz_to_rad(9.24), mhz_to_rad(9.24)};
    CHECK(std::abs(cavity_steady_state(1.0, 0.0, cav)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("filter_pulse properties") {
  const CavityParams cav{mhz_to_rad(9.24), mhz_to_rad(2.0)};
  const double dt = 1e-3;
  const int n = 3001;

  SUBCASE("linearity in the complex drive") {
    std::vector<cplx> d1(n), d2(n);
    for (int i = 0; i < n; ++i) {
      const double t = i * dt;
      d1[i] = mhz_to_rad(4.0) * std::exp(cplx(0.0, -0.8 * t)) * (1.0 + 0.3 * std::sin(2.0 * t));
      d2[i] = mhz_to_rad(3.0) * std::exp(cplx(0.0, 0.5 * t + 0.2 * std::cos(3.0 * t)));
    }
    const cplx a(0.6, 0.3), b(-0.4, 0.8);
    std::vector<cplx> combo(n);
    for (int i = 0; i < n; ++i) combo[i] = a * d1[i] + b * d2[i];

    const FieldTrace f1 = filter_pulse(pulse_from_drive(d1, dt), cav, dt);
    const FieldTrace f2 = filter_pulse(pulse_from_drive(d2, dt), cav, dt);
    const FieldTrace fc = filter_pulse(pulse_from_drive(combo, dt), cav, dt);
    double max_rel = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(fc.omega_int[i]));
    for (int i = 0; i < n; ++i)
      max_rel = std::max(max_rel,
                         std::abs(fc.omega_int[i] - (a * f1.omega_int[i] + b * f2.omega_int[i])) /
                             scale);
    CHECK(max_rel < 1e-8);
  }

  SUBCASE("convergence to the steady state is bounded by the decaying exponential") {
    const double amp = mhz_to_rad(7.0);
    const FieldTrace f = filter_pulse(constant_pulse(amp, 1.5), cav, dt);
    const cplx ss = cavity_steady_state(amp, 0.0, cav);
    for (int i = 0; i < f.size(); ++i)
      CHECK(std::abs(f.omega_int[i] - ss) <=
            std::abs(ss) * std::exp(-cav.gamma_cav * f.t(i)) * (1.0 + 1e-9) + 1e-12);
  }

  SUBCASE("rejects non-finite samples") {
    Pulse bad = constant_pulse(1.0, 0.01);
    bad.omega_ext[3] = std::nan("");
    CHECK_THROWS_AS(filter_pulse(bad, cav, 1e-3), std::invalid_argument);
  }
}

TEST_CASE("simulate_rabi_grid") {
  SystemParams params = SystemParams::defaults();

  SUBCASE("zero drive concentrates the spectrum at zero frequency") {
    RabiGridSettings s;
    s.drive = 0.0;
    s.n_time = 64;
    const auto grid = simulate_rabi_grid(mhz_to_rad(9.24), {0.0, mhz_to_rad(5.0)}, s, params);
    for (const auto& row : grid.mag) {
      // mean subtraction zeroes the DC bin itself, so the slow population
      // decay lands in the first bin; nothing above it may dominate
      int argmax = 0;
      for (size_t k = 1; k < row.size(); ++k)
        if (row[k] > row[argmax]) argmax = static_cast<int>(k);
      CHECK(argmax <= 1);
    }
  }

  SUBCASE("transparent cavity peaks at the bare Rabi frequency") {
    RabiGridSettings s;
    s.drive = mhz_to_rad(5.0);
    const double gamma = mhz_to_rad(250.0);  // 50x the drive
    const auto grid = simulate_rabi_grid(gamma, {0.0}, s, params);
    int argmax = 1;
    for (size_t k = 1; k < grid.mag[0].size(); ++k)
      if (grid.mag[0][k] > grid.mag[0][argmax]) argmax = static_cast<int>(k);
    const double df = grid.freq_mhz[1] - grid.freq_mhz[0];
    CHECK(std::abs(grid.freq_mhz[argmax] - 5.0) <= df);
  }

  SUBCASE("peak frequency is even in the cavity detuning") {
    RabiGridSettings s;
    s.drive = mhz_to_rad(12.0);
    const auto grid =
        simulate_rabi_grid(mhz_to_rad(9.24), {mhz_to_rad(-8.0), mhz_to_rad(8.0)}, s, params);
    auto peak = [&](int row) {
      int argmax = 1;
      for (size_t k = 1; k < grid.mag[row].size(); ++k)
        if (grid.mag[row][k] > grid.mag[row][argmax]) argmax = static_cast<int>(k);
      return argmax;
    };
    CHECK(peak(0) == peak(1));
  }

  SUBCASE("empty detuning list is rejected") {
    CHECK_THROWS_AS(simulate_rabi_grid(1.0, {}, RabiGridSettings{}, params),
                    std::invalid_argument);
  }
}

TEST_CASE("calibrate_gamma") {
  SystemParams params = SystemParams::defaults();
  RabiGridSettings settings;
  settings.n_time = 128;
  settings.t_max = 0.6;
  settings.drive = mhz_to_rad(19.3);

  // 11 detunings keep this test quick; the acceptance suite runs 51.
  std::vector<double> detunings;
  for (int i = 0; i <= 10; ++i) detunings.push_back(mhz_to_rad(-25.0 + 5.0 * i));
  std::vector<double> candidates;
  for (int i = 0; i < 10; ++i) candidates.push_back(mhz_to_rad(5.0 + i));

  const double gamma_true = mhz_to_rad(9.24);
  const SpectrumGrid measured = simulate_rabi_grid(gamma_true, detunings, settings, params, 2);

  SUBCASE("recovers the generating gamma within 0.5 MHz") {
    const auto cal = calibrate_gamma(measured, candidates, settings.drive, params, 2);
    CHECK(std::abs(rad_to_mhz(cal.gamma_est) - 9.24) < 0.5);
  }

  SUBCASE("zero error when the measured grid equals one candidate") {
    std::vector<double> cand2 = candidates;
    cand2[4] = gamma_true;
    const auto cal = calibrate_gamma(measured, cand2, settings.drive, params, 2);
    CHECK(cal.errors[4] < 1e-12);
    for (size_t i = 0; i < cand2.size(); ++i)
      if (i != 4) CHECK(cal.errors[i] > cal.errors[4]);
  }

  SUBCASE("scale invariance of the measured grid") {
    SpectrumGrid scaled = measured;
    for (auto& row : scaled.mag)
      for (auto& v : row) v *= 37.5;
    const auto a = calibrate_gamma(measured, candidates, settings.drive, params, 2);
    const auto b = calibrate_gamma(scaled, candidates, settings.drive, params, 2);
    CHECK(a.gamma_est == doctest::Approx(b.gamma_est).epsilon(1e-9));
  }

  SUBCASE("1 percent uniform noise moves the estimate by less than 0.5 MHz") {
    const auto clean = calibrate_gamma(measured, candidates, settings.drive, params, 2);
    Rng rng(7);
    for (int draw = 0; draw < 20; ++draw) {
      SpectrumGrid noisy = measured;
      for (auto& row : noisy.mag)
        for (auto& v : row) v *= 1.0 + 0.01 * rng.uniform(-1.0, 1.0);
      const auto cal = calibrate_gamma(noisy, candidates, settings.drive, params, 2);
      CHECK(std::abs(rad_to_mhz(cal.gamma_est - clean.gamma_est)) < 0.5);
    }
  }

  SUBCASE("fewer than 4 candidates is rejected") {
    CHECK_THROWS_AS(calibrate_gamma(measured, {1.0, 2.0, 3.0}, settings.drive, params),
                    std::invalid_argument);
  }

  SUBCASE("grid shape mismatch is rejected") {
    SpectrumGrid wrong = measured;
    wrong.mag.pop_back();  // magnitudes no longer match the detuning axis
    CHECK_THROWS_AS(calibrate_gamma(wrong, candidates, settings.drive, params),
                    std::invalid_argument);
  }
}

TEST_CASE("spectrum grid CSV round trip") {
  SystemParams params = SystemParams::defaults();
  RabiGridSettings s;
  s.n_time = 32;
  const auto grid = simulate_rabi_grid(mhz_to_rad(9.0), {0.0, mhz_to_rad(3.0)}, s, params);
  const std::string path = "/tmp/dnp_test_grid.csv";
  write_spectrum_csv(path, grid);
  const SpectrumGrid back = read_spectrum_csv(path);
  CHECK(back.n_time == grid.n_time);
  CHECK(back.t_max_us == doctest::Approx(grid.t_max_us).epsilon(1e-9));
  // writing the parsed grid again must reproduce the bytes
  const std::string path2 = "/tmp/dnp_test_grid2.csv";
  write_spectrum_csv(path2, back);
  CHECK(read_text_file(path) == read_text_file(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}
