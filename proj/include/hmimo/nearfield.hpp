#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"
#include "hmimo/geometry.hpp"
#include "hmimo/quadrature.hpp"
#include "hmimo/specfun.hpp"

// Near-field quantities are physical: unit current moments, E in V/m, power in W.
// E = -j k eta0 * G . p and H = curl(g p), so every gain ratio is constant-free.

namespace hmimo {

using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

enum class Pol { x = 0, y = 1, z = 2 };

inline std::string to_string(Pol p) {
  switch (p) {
    case Pol::x: return "x";
    case Pol::y: return "y";
    case Pol::z: return "z";
  }
  return "?";
}

inline Vec3 unit(Pol p) {
  Vec3 v = Vec3::Zero();
  v[int(p)] = 1.0;
  return v;
}

enum class FieldApproach { Dyadic, Scalar };

namespace detail {

inline double separation(const Vec3& r, const Vec3& rp) {
  const double R = (r - rp).norm();
  if (!(R > 1e-12)) throw InvalidArgument("green function: zero source-observer distance");
  return R;
}

}  // namespace detail

inline cplx scalar_green(const Vec3& r, const Vec3& rp) {
  const double R = detail::separation(r, rp);
  return std::polar(1.0 / (4.0 * pi * R), -wavenumber * R);
}

// Far-zone approximation exp(-jkr) exp(jk r'.r_hat) / (4 pi r).
inline cplx scalar_green_far(const Vec3& r, const Vec3& rp) {
  const double rn = r.norm();
  require(rn > 1e-12, "scalar_green_far: observation point at origin");
  const Vec3 rhat = r / rn;
  return std::polar(1.0 / (4.0 * pi * rn), -wavenumber * rn + wavenumber * rp.dot(rhat));
}

// Radial kernels of the electric dyadic: G = G1 I + G2 a a^T.
inline std::array<cplx, 2> dyadic_kernels(double R) {
  const double k = wavenumber;
  const cplx ph = std::polar(1.0 / (4.0 * pi * k * k * R * R * R), -k * R);
  const double kr = k * R;
  return {cplx{-1.0 + kr * kr, -kr} * ph, cplx{3.0 - kr * kr, 3.0 * kr} * ph};
}

inline CMat3 electric_dyadic(const Vec3& r, const Vec3& rp) {
  const double R = detail::separation(r, rp);
  const Vec3 a = (r - rp) / R;
  const auto [g1, g2] = dyadic_kernels(R);
  CMat3 G = (a * a.transpose()).cast<cplx>() * g2;
  G.diagonal().array() += g1;
  return G;
}

inline CVec3 scalar_gradient(const Vec3& r, const Vec3& rp) {
  const double R = detail::separation(r, rp);
  const Vec3 a = (r - rp) / R;
  const cplx g = std::polar(1.0 / (4.0 * pi * R), -wavenumber * R);
  return a.cast<cplx>() * (-(cplx{1.0 / R, wavenumber}) * g);
}

// M with M J = grad(g) x J.
inline CMat3 magnetic_dyadic(const Vec3& r, const Vec3& rp) {
  const CVec3 d = scalar_gradient(r, rp);
  CMat3 M = CMat3::Zero();
  M(0, 1) = -d.z();
  M(0, 2) = d.y();
  M(1, 0) = d.z();
  M(1, 2) = -d.x();
  M(2, 0) = -d.y();
  M(2, 1) = d.x();
  return M;
}

// Folded source constant: E = field_constant() * G . p for a unit current moment.
inline cplx field_constant() { return cplx{0.0, -wavenumber * eta0}; }

struct DyadicSample {
  CVec3 E = CVec3::Zero();
  CVec3 H = CVec3::Zero();
  Vec3 at = Vec3::Zero();
  Pol source_pol = Pol::x;
};

inline DyadicSample synth_fields(const ArrayGeometry& g, const Excitation& e, Pol p,
                                 const Vec3& r, FieldApproach approach = FieldApproach::Dyadic) {
  check_matches(g, e);
  DyadicSample s;
  s.at = r;
  s.source_pol = p;
  const int ip = int(p);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec3& rp = g.positions[n];
    const double R = detail::separation(r, rp);
    const Vec3 a = (r - rp) / R;
    const cplx w = e.weight(n);
    const cplx gs = std::polar(1.0 / (4.0 * pi * R), -wavenumber * R);
    if (approach == FieldApproach::Dyadic) {
      const auto [g1, g2] = dyadic_kernels(R);
      CVec3 col = (a * a[ip]).cast<cplx>() * g2;
      col[ip] += g1;
      s.E += w * col;
    } else {
      s.E[ip] += w * gs;
    }
    // grad(g) x p
    const cplx dg = -(cplx{1.0 / R, wavenumber}) * gs;
    const Vec3 c = a.cross(unit(p));
    s.H += (w * dg) * c.cast<cplx>();
  }
  s.E *= field_constant();
  return s;
}

struct PoyntingSample {
  Vec3 S = Vec3::Zero();
  // Flow components relabelled by field polarization (x, y, z).
  Vec3 S_pq = Vec3::Zero();
};

inline PoyntingSample poynting(const DyadicSample& s) {
  PoyntingSample out;
  out.S = 0.5 * s.E.cross(s.H.conjugate()).real();
  // z-flow is attributed to x, x-flow to y, y-flow to z.
  out.S_pq = Vec3(out.S.z(), out.S.x(), out.S.y());
  return out;
}

struct SphereSurface {
  double radius = 100.0;
  SphereRule rule{128, 256};
  bool refine = true;
  double tol = 1e-6;
};

namespace detail {

inline double surface_flux(const ArrayGeometry& g, const Excitation& e, Pol p, const Vec3& c,
                           double radius, const SphereRule& rule) {
  const double r2 = radius * radius;
  return integrate_sphere(rule, [&](double ct, double st, double cp, double sp) {
    const Vec3 n(st * cp, st * sp, ct);
    const PoyntingSample ps = poynting(synth_fields(g, e, p, c + radius * n));
    return ps.S.dot(n) * r2;
  });
}

}  // namespace detail

// Flux of the Poynting vector through a sphere centered on the array centroid.
inline double total_power_surface(const ArrayGeometry& g, const Excitation& e, Pol p,
                                  const SphereSurface& surf = {}) {
  check_matches(g, e);
  require(surf.radius >= g.circumradius() + 1.0,
          "total_power_surface: sphere must clear the array by one wavelength");
  const Vec3 c = g.centroid();
  const double coarse = detail::surface_flux(g, e, p, c, surf.radius, surf.rule);
  if (!surf.refine) return coarse;
  const double fine = detail::surface_flux(g, e, p, c, surf.radius,
                                           SphereRule{surf.rule.n_theta * 2, surf.rule.n_phi * 2});
  if (std::fabs(fine - coarse) > surf.tol * std::fabs(fine))
    throw QuadratureNotConverged("total_power_surface: refinement disagreement", coarse, fine);
  return fine;
}

// Imaginary part of G_pp between two points; regular at zero separation.
inline double dyadic_imag_pp(const Vec3& d, Pol p) {
  const double R = d.norm();
  const double s = wavenumber * R;
  const double j0 = std::sph_bessel(0, s), j2 = std::sph_bessel(2, s);
  const double im_g1 = wavenumber / (12.0 * pi) * (j2 - 2.0 * j0);
  if (R == 0.0) return im_g1;
  const double c = d[int(p)] / R;
  return im_g1 - wavenumber / (4.0 * pi) * j2 * c * c;
}

// Radiated power of a dipole array from the induced-EMF double sum.
inline double radiated_power_dipole(const ArrayGeometry& g, const Excitation& e, Pol p) {
  check_matches(g, e);
  const std::size_t N = g.size();
  std::vector<double> rows(N);
  for (std::size_t m = 0; m < N; ++m) {
    double acc = 0.0;
    const cplx wm = std::conj(e.weight(m));
    for (std::size_t n = 0; n < N; ++n)
      acc += (wm * e.weight(n)).real() * dyadic_imag_pp(g.positions[m] - g.positions[n], p);
    rows[m] = acc;
  }
  return -0.5 * wavenumber * eta0 * pairwise_sum(rows);
}

inline double single_dipole_power() { return eta0 * wavenumber * wavenumber / (12.0 * pi); }

// Near-field gain G^{pq} = 4 pi r^2 S_pq / P_total with r measured from the array centroid.
inline double near_gain(const ArrayGeometry& g, const Excitation& e, Pol p, Pol q, const Vec3& r,
                        double total_power, FieldApproach approach = FieldApproach::Dyadic) {
  require(total_power > 0.0, "near_gain: total power must be positive");
  const DyadicSample s = synth_fields(g, e, p, r, approach);
  const double d = (r - g.centroid()).norm();
  double flow;
  if (approach == FieldApproach::Dyadic) {
    flow = poynting(s).S_pq[int(q)];
  } else {
    flow = std::norm(s.E[int(q)]) / (2.0 * eta0);
  }
  return 4.0 * pi * d * d * flow / total_power;
}

// Far-zone gain of a dipole array toward (theta, phi), polarization-summed.
inline double far_gain_dipole(const ArrayGeometry& g, const Excitation& e, Pol p, double theta,
                              double phi, double total_power) {
  require(total_power > 0.0, "far_gain_dipole: total power must be positive");
  const Vec3 u = direction(theta, phi);
  cplx af{0.0, 0.0};
  for (std::size_t n = 0; n < g.size(); ++n)
    af += e.weight(n) * std::polar(1.0, wavenumber * u.dot(g.positions[n]));
  const Vec3 pt = unit(p) - u * u[int(p)];
  const double k = wavenumber;
  const double U = eta0 * k * k / (32.0 * pi * pi) * std::norm(af) * pt.squaredNorm();
  return 4.0 * pi * U / total_power;
}

struct LossFactorModel {
  double m = 0.0;
  double c_m = 0.0;
  double a_L = 0.12;
  double sigma = 0.0;
};

inline constexpr double loss_coefficient_polarization = 0.12;
inline constexpr double loss_coefficient_illumination = 0.18;
inline constexpr double loss_coefficient_beamforming = 0.5;

inline double loss_sigma(double a_L, double side, double R) {
  require(R > 0.0, "loss_sigma: distance must be positive");
  return a_L * wavenumber * side / R;
}

// Uniform-aperture series: sum (-1)^j sigma^{2j} / ((j+1)!)^2.
inline double loss_factor_uniform(double sigma, const SeriesControl& ctrl = {}) {
  validate(ctrl);
  require(sigma >= 0.0, "loss_factor: sigma must be non-negative");
  long double term = 1.0L, sum = 1.0L;
  const long double s2 = (long double)sigma * sigma;
  if (sigma == 0.0) return 1.0;
  for (int j = 1; j < ctrl.max_terms; ++j) {
    term *= -s2 / ((long double)(j + 1) * (j + 1));
    sum += term;
    if (s2 < (long double)(j + 1) * (j + 1) && std::fabs((double)term) <= ctrl.rel_tol * std::fabs((double)sum))
      return std::fabs(double(sum));
  }
  throw SeriesNotConverged("loss_factor_uniform: series did not converge", double(sum), ctrl.max_terms);
}

namespace detail {

// I(m, n) = n! m! sum (-1)^j (sigma/2)^{2j} / ((j+m+1)! (j+n+1)!)
inline double aperture_moment(double m, double n, double sigma, const SeriesControl& ctrl) {
  const double x2 = 0.25 * sigma * sigma;
  const double lead = std::lgamma(m + 1.0) + std::lgamma(n + 1.0);
  long double sum = 0.0L;
  for (int j = 0; j < ctrl.max_terms; ++j) {
    const double lt = lead + (j > 0 ? j * std::log(x2) : 0.0) - std::lgamma(j + m + 2.0) -
                      std::lgamma(j + n + 2.0);
    const long double term = ((j % 2) ? -1.0L : 1.0L) * std::exp((long double)lt);
    sum += term;
    if (x2 == 0.0) return double(sum);
    if (x2 < (j + m + 2.0) * (j + n + 2.0) &&
        std::fabs((double)term) <= ctrl.rel_tol * std::fabs((double)sum))
      return double(sum);
  }
  throw SeriesNotConverged("loss_factor: aperture series did not converge", double(sum),
                           ctrl.max_terms);
}

}  // namespace detail

// Tapered-aperture loss factor with field distribution parameters (m, c_m), evaluated as
// printed. It vanishes as sigma -> 0 and does not reduce to the uniform series at m = c_m = 0.
inline double loss_factor_aperture(double m, double c_m, double sigma, const SeriesControl& ctrl = {}) {
  validate(ctrl);
  require(m >= 0.0 && sigma >= 0.0, "loss_factor: m and sigma must be non-negative");
  const double I_mm = detail::aperture_moment(m, m, sigma, ctrl);
  const double I_m0 = detail::aperture_moment(m, 0.0, sigma, ctrl);
  const double I_0m = detail::aperture_moment(0.0, m, sigma, ctrl);
  const double I_00 = detail::aperture_moment(0.0, 0.0, sigma, ctrl);
  const double num = sigma * sigma * std::pow(std::fabs(I_mm + c_m * I_m0 + c_m * I_0m + c_m * c_m * I_00), 2);
  const double den = 0.5 * c_m * c_m + c_m / (m + 1.0) + 1.0 / (4.0 * m + 2.0);
  return num / (16.0 * den * den);
}

inline double loss_factor(const LossFactorModel& model, const SeriesControl& ctrl = {}) {
  if (model.m == 0.0 && model.c_m == 0.0) return loss_factor_uniform(model.sigma, ctrl);
  return loss_factor_aperture(model.m, model.c_m, model.sigma, ctrl);
}

struct LossDecomposition {
  double R = 0.0;
  double gain_dyadic_focus = 0.0;
  double gain_scalar_focus = 0.0;
  double gain_dyadic_steer = 0.0;
  double gain_far = 0.0;
  double polarization = 1.0;
  double illumination = 1.0;
  double beamforming = 1.0;
};

// Combined amplitude of phase-only-conjugate weights, projected on the receiving-aperture
// normal, relative to every element arriving with the on-axis reference amplitude.
inline double illumination_ratio(const ArrayGeometry& g, const Vec3& target) {
  const Vec3 c = g.centroid();
  const double R = (target - c).norm();
  const Vec3 normal = (target - c) / R;
  double acc = 0.0;
  for (const auto& rp : g.positions) {
    const Vec3 d = target - rp;
    const double Rn = d.norm();
    acc += (1.0 / (4.0 * pi * Rn)) * (d.dot(normal) / Rn);
  }
  const double ref = double(g.size()) / (4.0 * pi * R);
  return (acc / ref) * (acc / ref);
}

// Gains and loss ratios toward a point at distance R on the broadside axis of a transmit array.
inline LossDecomposition gain_loss_decomposition(const ArrayGeometry& tx, double R, Pol p = Pol::x) {
  require(R > 0.0, "gain_loss_decomposition: distance must be positive");
  const Vec3 c = tx.centroid();
  const Vec3 target = c + Vec3(0.0, 0.0, R);
  LossDecomposition d;
  d.R = R;
  const Excitation focus = focus_excitation(tx, target);
  const Excitation steer = steer_excitation(tx, 0.0, 0.0);
  const double P_focus = radiated_power_dipole(tx, focus, p);
  const double P_steer = radiated_power_dipole(tx, steer, p);
  d.gain_dyadic_focus = near_gain(tx, focus, p, p, target, P_focus, FieldApproach::Dyadic);
  d.gain_scalar_focus = near_gain(tx, focus, p, p, target, P_focus, FieldApproach::Scalar);
  d.gain_dyadic_steer = near_gain(tx, steer, p, p, target, P_steer, FieldApproach::Dyadic);
  d.gain_far = far_gain_dipole(tx, steer, p, 0.0, 0.0, P_steer);
  d.polarization = d.gain_dyadic_focus / d.gain_scalar_focus;
  d.beamforming = d.gain_dyadic_steer / d.gain_dyadic_focus;
  d.illumination = illumination_ratio(tx, target);
  return d;
}

}  // namespace hmimo
