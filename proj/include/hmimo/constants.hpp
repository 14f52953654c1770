#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace hmimo {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Lengths are measured in wavelengths throughout, so k = 2*pi.
inline constexpr double wavenumber = 2.0 * pi;

// Free-space wave impedance in ohms, used by the near-field solver.
inline constexpr double eta0 = 376.730313668;

inline constexpr cplx j_unit{0.0, 1.0};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double deg2rad(double d) { return d * pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / pi; }

}  // namespace hmimo
