#pragma once

#include <cmath>
#include <cstdint>

namespace dnp {

// Deterministic, implementation-independent RNG. The standard <random>
// distributions are not pinned across library versions, so uniform and
// normal draws are generated explicitly from a splitmix64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (no caching, two u64 per draw).
  double normal() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTau * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Independent child stream, used to give each ensemble instance its own
  // generator regardless of evaluation order.
  Rng fork(std::uint64_t salt) const { return Rng(state_ ^ platform_mix(salt + 0x6a09e667f3bcc909ull)); }

 private:
  static constexpr double kTau = 6.283185307179586476925286766559;
  static std::uint64_t platform_mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return x;
  }
  std::uint64_t state_;
};

}  // namespace dnp
