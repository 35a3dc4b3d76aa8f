#include <doctest.h>

#include <cmath>
#include <map>

#include "dnp/ensemble.hpp"

using namespace dnp;

namespace {
const std::string kTablePath = std::string(DNP_DATA_DIR) + "/protons_example.csv";
}

TEST_CASE("compute_hyperfine") {
  const double gs = kGammaElectron, gi = kGammaProton;

  SUBCASE("nucleus on the z-axis: A_zz = -2d, transverse rows vanish") {
    const double r = 0.4;
    const auto a = compute_hyperfine({0.0, 0.0, r}, gs, gi);
    const double d = kDipolarPrefactor * gs * gi / (r * r * r);
    CHECK(a.a_zx == doctest::Approx(0.0));
    CHECK(a.a_zy == doctest::Approx(0.0));
    CHECK(a.a_zz == doctest::Approx(-2.0 * d).epsilon(1e-12));
  }

  SUBCASE("nucleus in the xy-plane: A_zz = +d") {
    const double r = 0.5;
    const auto a = compute_hyperfine({r / std::sqrt(2.0), r / std::sqrt(2.0), 0.0}, gs, gi);
    const double d = kDipolarPrefactor * gs * gi / (r * r * r);
    CHECK(a.a_zx == doctest::Approx(0.0));
    CHECK(a.a_zy == doctest::Approx(0.0));
    CHECK(a.a_zz == doctest::Approx(d).epsilon(1e-12));
  }

  SUBCASE("doubling the distance divides every component by 8") {
    const Eigen::Vector3d pos(0.2, 0.3, 0.4);
    const auto a1 = compute_hyperfine(pos, gs, gi);
    const auto a2 = compute_hyperfine(2.0 * pos, gs, gi);
    CHECK(a2.a_zx == doctest::Approx(a1.a_zx / 8.0).epsilon(1e-12));
    CHECK(a2.a_zy == doctest::Approx(a1.a_zy / 8.0).epsilon(1e-12));
    CHECK(a2.a_zz == doctest::Approx(a1.a_zz / 8.0).epsilon(1e-12));
  }

  SUBCASE("positions too close to the origin are rejected") {
    CHECK_THROWS_AS(compute_hyperfine({0.01, 0.0, 0.0}, gs, gi), std::invalid_argument);
  }
}

TEST_CASE("proton table") {
  const ProtonTable table = read_proton_table(kTablePath, kGammaElectron, kGammaProton);

  SUBCASE("all 574 entries admitted with positive norms") {
    CHECK(table.size() == 574);
    for (const auto& t : table.tensors) CHECK(t.norm() > 0.0);
  }

  SUBCASE("ranking sorts by descending coupling norm and is a permutation") {
    std::vector<bool> seen(table.size(), false);
    for (size_t i = 1; i < table.ranking.size(); ++i)
      CHECK(table.tensors[table.ranking[i - 1]].norm() >=
            table.tensors[table.ranking[i]].norm());
    for (int idx : table.ranking) {
      CHECK(!seen[idx]);
      seen[idx] = true;
    }
  }

  SUBCASE("tensors are consistent with positions") {
    for (int i : {0, 100, 573}) {
      const auto ref = compute_hyperfine(table.positions[i], kGammaElectron, kGammaProton);
      CHECK(table.tensors[i].a_zx == ref.a_zx);
      CHECK(table.tensors[i].a_zz == ref.a_zz);
    }
  }
}

TEST_CASE("sample_instance") {
  const ProtonTable table = read_proton_table(kTablePath, kGammaElectron, kGammaProton);

  SUBCASE("detuning width follows FWHM = 2 sqrt(2 ln 2) sigma") {
    EnsembleSpec spec;
    spec.detuning_fwhm = mhz_to_rad(10.0);
    const double sigma_expected = mhz_to_rad(10.0) / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    CHECK(rad_to_mhz(sigma_expected) == doctest::Approx(4.2466).epsilon(1e-4));
    Rng rng(3);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const auto inst = sample_instance(spec, table, rng);
      sum += inst.delta_es;
      sum2 += inst.delta_es * inst.delta_es;
    }
    const double sigma_emp = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    CHECK(sigma_emp == doctest::Approx(sigma_expected).epsilon(0.02));
  }

  SUBCASE("pool equal to n_pick returns exactly the top set") {
    EnsembleSpec spec;
    spec.n_pick = 3;
    spec.pool_size = 3;
    Rng rng(5);
    const auto inst = sample_instance(spec, table, rng);
    std::vector<int> expect(table.ranking.begin(), table.ranking.begin() + 3);
    std::vector<int> got = inst.nuclei;
    std::sort(expect.begin(), expect.end());
    std::sort(got.begin(), got.end());
    CHECK(got == expect);
  }

  SUBCASE("draws are uniform over the pool: frequency 1/10 within 3 sigma") {
    EnsembleSpec spec;  // n_pick 3, pool 30
    Rng rng(11);
    const int n_draws = 40600;
    std::map<int, int> counts;
    for (int i = 0; i < n_draws; ++i) {
      const auto inst = sample_instance(spec, table, rng);
      CHECK(inst.nuclei.size() == 3);
      CHECK(inst.nuclei[0] != inst.nuclei[1]);
      CHECK(inst.nuclei[1] != inst.nuclei[2]);
      CHECK(inst.nuclei[0] != inst.nuclei[2]);
      for (int idx : inst.nuclei) counts[idx]++;
    }
    const double p = 3.0 / 30.0;
    const double sigma = std::sqrt(n_draws * p * (1.0 - p));
    for (const auto& [idx, count] : counts) {
      (void)idx;
      CHECK(std::abs(count - n_draws * p) < 3.0 * sigma);
    }
    CHECK(counts.size() == 30);
  }
}

TEST_CASE("evaluate_fom") {
  const ProtonTable table = read_proton_table(kTablePath, kGammaElectron, kGammaProton);
  const SystemParams base = SystemParams::defaults();
  const CavityParams cav{};
  SolverOptions opts;
  opts.rel_tol = 1e-6;
  opts.abs_tol = 1e-9;

  SUBCASE("zero-coupling table gives exactly zero mean and spread") {
    ProtonTable zero = table;
    for (auto& t : zero.tensors) t = {0, 0, 0};
    EnsembleSpec spec;
    spec.n_instances = 4;
    spec.seed = 9;
    const Pulse pulse = linear_sweep({mhz_to_rad(20.0), 2.0, mhz_to_rad(6.0)}, 1e-3);
    const auto res = evaluate_fom(pulse, spec, base, cav, 1, zero, 2, opts);
    CHECK(std::abs(res.mean) < 1e-10);
    CHECK(res.std_err < 1e-10);
  }

  SUBCASE("single instance: zero std_err, mean equals the solver output") {
    EnsembleSpec spec;
    spec.n_instances = 1;
    spec.seed = 21;
    const Pulse pulse = linear_sweep({mhz_to_rad(20.0), 3.0, mhz_to_rad(6.0)}, 1e-3);
    const auto res = evaluate_fom(pulse, spec, base, cav, 1, table, 1, opts);
    CHECK(res.std_err == 0.0);

    Rng rng(spec.seed);
    const auto inst = sample_instance(spec, table, rng);
    SystemParams params = base;
    params.couplings.clear();
    for (int idx : inst.nuclei) params.couplings.push_back(table.tensors[idx]);
    params.delta_es = inst.delta_es;
    const auto shots = repeat_shots(pulse, params, cav, 1, opts);
    CHECK(res.per_instance[0] == doctest::Approx(shots.p_mean[0]).epsilon(1e-12));
  }

  SUBCASE("deterministic and independent of the worker count") {
    EnsembleSpec spec;
    spec.n_instances = 6;
    spec.seed = 33;
    const Pulse pulse = linear_sweep({mhz_to_rad(18.0), 2.0, mhz_to_rad(6.0)}, 1e-3);
    const auto a = evaluate_fom(pulse, spec, base, cav, 1, table, 1, opts);
    const auto b = evaluate_fom(pulse, spec, base, cav, 1, table, 2, opts);
    CHECK(a.per_instance == b.per_instance);
    CHECK(a.mean == b.mean);
  }

  SUBCASE("linear sweep beats the zero pulse") {
    EnsembleSpec spec;
    spec.n_instances = 12;
    spec.seed = 2;
    const Pulse sweep = linear_sweep({mhz_to_rad(25.0), 4.0, mhz_to_rad(6.0)}, 1e-3);
    Pulse silent = sweep;
    for (auto& a : silent.omega_ext) a = 0.0;
    const auto on = evaluate_fom(sweep, spec, base, cav, 1, table, 2, opts);
    const auto off = evaluate_fom(silent, spec, base, cav, 1, table, 2, opts);
    CHECK(on.mean > off.mean);
    CHECK(std::abs(off.mean) < 1e-9);
  }

  SUBCASE("std_err shrinks roughly as 1/sqrt(n)") {
    const Pulse pulse = linear_sweep({mhz_to_rad(25.0), 1.5, mhz_to_rad(6.0)}, 1e-3);
    EnsembleSpec small;
    small.n_instances = 50;
    small.seed = 4;
    EnsembleSpec large = small;
    large.n_instances = 200;
    const auto rs = evaluate_fom(pulse, small, base, cav, 1, table, 2, opts);
    const auto rl = evaluate_fom(pulse, large, base, cav, 1, table, 2, opts);
    const double ratio = rs.std_err / rl.std_err;  // expect ~2
    CHECK(ratio > 2.0 / 1.5);
    CHECK(ratio < 2.0 * 1.5);
  }
}
