#pragma once

// Unit conventions used throughout the library:
//   time         -> microseconds (us)
//   frequencies  -> angular, rad/us
//   field        -> mT
//   distance     -> nm
// User-facing files and CLI values are linear MHz; the 2*pi conversion
// happens only at the I/O boundary.

namespace dnp {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

constexpr double mhz_to_rad(double f_mhz) { return kTwoPi * f_mhz; }
constexpr double rad_to_mhz(double w) { return w / kTwoPi; }

// Gyromagnetic ratios in rad/us per mT. The electron value carries its
// physical (negative) sign; the Zeeman frequency is -gamma*B0.
inline constexpr double kGammaElectron = -176.08596;   // g ~ 2.0023
inline constexpr double kGammaProton = 0.26752219;

// Point-dipole coupling prefactor: mu0/(4*pi) * hbar expressed so that
//   d [rad/us] = kDipolarPrefactor * gamma1 * gamma2 / r^3
// with gammas in rad/us/mT and r in nm.
inline constexpr double kDipolarPrefactor = 1.054571817e-2;

// Hardware amplitude ceiling, 19.3 MHz Rabi.
inline constexpr double kMaxRabi = kTwoPi * 19.3;

}  // namespace dnp
