#pragma once

#include <cmath>
#include <string>

#include "hmimo/error.hpp"

namespace hmimo {

struct SeriesControl {
  double rel_tol = 1e-12;
  int max_terms = 200;
};

inline void validate(const SeriesControl& c) {
  require(c.rel_tol > 0.0, "SeriesControl: rel_tol must be positive");
  require(c.max_terms >= 1, "SeriesControl: max_terms must be at least 1");
}

struct SeriesResult {
  double value = 0.0;
  int terms = 0;
};

// Bessel function of the first kind, integer order.
inline double bessel_j(int n, double x) {
  require(n >= 0, "bessel_j: order must be non-negative");
  require(std::isfinite(x), "bessel_j: argument must be finite");
  const double ax = std::fabs(x);
  const double v = std::cyl_bessel_j(double(n), ax);
  return (x < 0.0 && (n % 2) == 1) ? -v : v;
}

inline double beta_fn(double m, double n) {
  require(m > 0.0 && n > 0.0, "beta_fn: arguments must be positive");
  return std::exp(std::lgamma(m) + std::lgamma(n) - std::lgamma(m + n));
}

inline double sinc_k(double x) {
  if (std::fabs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(x) / x;
}

namespace detail {

inline bool non_positive_integer(double b) {
  return b <= 0.0 && std::floor(b) == b;
}

}  // namespace detail

// Generalized hypergeometric 1F2 with rising Pochhammer symbols.
inline SeriesResult hyp1f2_series(double a1, double b1, double b2, double z,
                                  const SeriesControl& ctrl = {}) {
  validate(ctrl);
  require(!detail::non_positive_integer(b1) && !detail::non_positive_integer(b2),
          "hyp1f2: lower parameters must not be non-positive integers");
  long double term = 1.0L;
  long double sum = 1.0L;
  if (z == 0.0) return {1.0, 1};
  for (int k = 0; k < ctrl.max_terms; ++k) {
    const long double ratio = (a1 + k) * (long double)z / ((b1 + k) * (b2 + k) * (k + 1.0L));
    const long double next = term * ratio;
    sum += next;
    // Terms may grow before they shrink; only stop once they are decreasing.
    if (next == 0.0L ||
        (std::fabs((double)ratio) < 1.0 &&
         std::fabs((double)next) <= ctrl.rel_tol * std::fabs((double)sum))) {
      return {double(sum), k + 2};
    }
    term = next;
  }
  throw SeriesNotConverged("hyp1f2: series did not converge", double(sum), ctrl.max_terms);
}

inline double hyp1f2(double a1, double b1, double b2, double z, const SeriesControl& ctrl = {}) {
  return hyp1f2_series(a1, b1, b2, z, ctrl).value;
}

}  // namespace hmimo
