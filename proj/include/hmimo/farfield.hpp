#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"
#include "hmimo/geometry.hpp"
#include "hmimo/quadrature.hpp"
#include "hmimo/specfun.hpp"

// Far-field quantities use the wave impedance as the unit of power, i.e.
// P_rad values are expressed in multiples of 1/eta. It cancels in every gain.

namespace hmimo {

// Element amplitude pattern sin^u(theta) * cos^v(theta), rotationally symmetric in phi.
struct ElementPattern {
  double u = 0.0;
  double v = 0.0;
  double board_factor = 1.0;

  static ElementPattern isotropic(double board = 1.0) { return {0.0, 0.0, board}; }
  static ElementPattern cosine(double board = 1.0) { return {0.0, 1.0, board}; }
  static ElementPattern butterfly(double board = 1.0) { return {1.0, 1.0, board}; }

  bool is_isotropic() const { return u == 0.0 && v == 0.0; }
  bool is_cosine() const { return u == 0.0 && v == 1.0; }

  double amplitude(double cos_t, double sin_t) const {
    const double s = u == 0.0 ? 1.0 : std::pow(std::fabs(sin_t), u);
    double c = 1.0;
    if (v != 0.0) {
      c = std::pow(std::fabs(cos_t), v);
      if (cos_t < 0.0 && std::floor(v) == v && (long long)(v) % 2 != 0) c = -c;
    }
    return s * c;
  }

  // Power pattern sin^{2u} |cos|^{2v}.
  double power(double cos_t, double sin_t) const {
    const double a = amplitude(cos_t, sin_t);
    return a * a;
  }
};

inline void validate(const ElementPattern& p) {
  require(p.u > -1.0, "ElementPattern: u must exceed -1");
  require(p.v > -0.5, "ElementPattern: v must exceed -1/2");
  require(p.board_factor == 1.0 || p.board_factor == 2.0,
          "ElementPattern: board_factor must be 1 or 2");
}

enum class GainMethod { Quadrature, ClosedForm, Physical };

inline std::string to_string(GainMethod m) {
  switch (m) {
    case GainMethod::Quadrature: return "analytical-quadrature";
    case GainMethod::ClosedForm: return "analytical-closed";
    case GainMethod::Physical: return "physical";
  }
  return "unknown";
}

struct GainResult {
  double value = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  std::optional<AngularSpread> spread;
  GainMethod method = GainMethod::ClosedForm;
  bool realized = false;
  double efficiency = 1.0;

  double dbi() const { return to_db(value); }
};

struct EfficiencyModel {
  double D_e = 3.28;
  double a_l = 0.77;
  double S_v = 0.065;
};

struct FarField {
  cplx E_theta;
  cplx E_phi;
};

inline cplx array_factor(const ArrayGeometry& g, const Excitation& e, const Vec3& u) {
  cplx af{0.0, 0.0};
  for (std::size_t n = 0; n < g.size(); ++n)
    af += std::polar(e.amplitude[n], e.phase[n] + wavenumber * u.dot(g.positions[n]));
  return af;
}

inline FarField total_field(const ArrayGeometry& g, const Excitation& e,
                            const ElementPattern& pat, double theta, double phi) {
  check_matches(g, e);
  const cplx af = array_factor(g, e, direction(theta, phi));
  return {af * pat.amplitude(std::cos(theta), std::sin(theta)), cplx{0.0, 0.0}};
}

inline double radiation_intensity(const ArrayGeometry& g, const Excitation& e,
                                  const ElementPattern& pat, double theta, double phi) {
  const FarField f = total_field(g, e, pat, theta, phi);
  return 0.5 * (std::norm(f.E_theta) + std::norm(f.E_phi));
}

struct QuadratureOptions {
  SphereRule rule{};
  bool refine = true;
  double tol = 1e-6;
};

namespace detail {

inline double prad_on_rule(const ArrayGeometry& g, const Excitation& e,
                           const ElementPattern& pat, const SphereRule& rule) {
  const SphereNodes s = sphere_nodes(rule);
  const std::size_t N = g.size();
  const std::size_t nphi = s.cos_phi.size();
  // Horizontal phase per (phi, element), reused for every theta ring.
  std::vector<double> hphase(nphi * N);
  for (std::size_t p = 0; p < nphi; ++p)
    for (std::size_t n = 0; n < N; ++n)
      hphase[p * N + n] =
          wavenumber * (g.positions[n].x() * s.cos_phi[p] + g.positions[n].y() * s.sin_phi[p]);
  std::vector<double> rows(s.cos_theta.size());
  std::vector<double> ring(nphi);
  std::vector<double> vphase(N);
  for (std::size_t i = 0; i < s.cos_theta.size(); ++i) {
    const double ct = s.cos_theta[i], st = s.sin_theta[i];
    const double pw = pat.power(ct, st);
    for (std::size_t n = 0; n < N; ++n)
      vphase[n] = e.phase[n] + wavenumber * g.positions[n].z() * ct;
    for (std::size_t p = 0; p < nphi; ++p) {
      double re = 0.0, im = 0.0;
      const double* hp = &hphase[p * N];
      for (std::size_t n = 0; n < N; ++n) {
        const double ph = vphase[n] + hp[n] * st;
        re += e.amplitude[n] * std::cos(ph);
        im += e.amplitude[n] * std::sin(ph);
      }
      ring[p] = 0.5 * (re * re + im * im) * pw;
    }
    rows[i] = s.w_theta[i] * s.w_phi * pairwise_sum(ring);
  }
  return pairwise_sum(rows);
}

}  // namespace detail

// Total radiated power by sphere quadrature, optionally refinement-checked.
inline double prad_quadrature(const ArrayGeometry& g, const Excitation& e,
                              const ElementPattern& pat, const QuadratureOptions& opt = {}) {
  check_matches(g, e);
  validate(pat);
  const double coarse = detail::prad_on_rule(g, e, pat, opt.rule);
  if (!opt.refine) return coarse;
  const SphereRule fine_rule{opt.rule.n_theta * 2, opt.rule.n_phi * 2};
  const double fine = detail::prad_on_rule(g, e, pat, fine_rule);
  if (std::fabs(fine - coarse) > opt.tol * std::fabs(fine))
    throw QuadratureNotConverged("prad_quadrature: refinement disagreement", coarse, fine);
  return fine;
}

inline GainResult gain_quadrature(const ArrayGeometry& g, const Excitation& e,
                                  const ElementPattern& pat, double theta, double phi,
                                  const QuadratureOptions& opt = {}) {
  const double P = prad_quadrature(g, e, pat, opt);
  const double U = radiation_intensity(g, e, pat, theta, phi);
  GainResult r;
  r.value = pat.board_factor * 4.0 * pi * U / P;
  r.theta = theta;
  r.phi = phi;
  r.method = GainMethod::Quadrature;
  return r;
}

namespace detail {

// Kernel of the cos^2 pattern: integral of cos^2(theta) exp(j k d.u) over the sphere.
inline double cos_pattern_kernel(const Vec3& d) {
  const double R = d.norm();
  const double s = wavenumber * R;
  double fp_over_s, fpp;
  if (s < 1.0) {
    // Series of sinc derivatives; avoids cancellation near the origin.
    fp_over_s = 0.0;
    fpp = 0.0;
    double pw = 1.0;      // s^{2n-2}
    double fact = 6.0;    // (2n+1)!
    double sign = -1.0;
    for (int n = 1; n <= 14; ++n) {
      fp_over_s += sign * (2.0 * n) * pw / fact;
      fpp += sign * (2.0 * n) * (2.0 * n - 1.0) * pw / fact;
      pw *= s * s;
      fact *= (2.0 * n + 2.0) * (2.0 * n + 3.0);
      sign = -sign;
    }
  } else {
    const double sn = std::sin(s), cs = std::cos(s);
    fp_over_s = cs / (s * s) - sn / (s * s * s);
    fpp = -sn / s - 2.0 * cs / (s * s) + 2.0 * sn / (s * s * s);
  }
  const double c2 = R > 0.0 ? (d.z() / R) * (d.z() / R) : 0.0;
  return -4.0 * pi * (fpp * c2 + fp_over_s * (1.0 - c2));
}

// Theta integral of exp(j k z cos) J0(k rho sin) sin^{2u+1} |cos|^{2v} over [0, pi].
inline double general_pair_integral(double rho, double z, const ElementPattern& pat,
                                    const SeriesControl& ctrl) {
  const double kz = wavenumber * z;
  const double arg = -0.25 * (wavenumber * rho) * (wavenumber * rho);
  long double sum = 0.0L;
  long double coef = 1.0L;  // (-1)^q (kz)^{2q} / (2q)!
  for (int q = 0; q < ctrl.max_terms; ++q) {
    const double b = beta_fn(pat.u + 1.0, pat.v + q + 0.5);
    const double f = hyp1f2(pat.u + 1.0, 1.0, pat.u + pat.v + q + 1.5, arg, ctrl);
    const long double term = coef * b * f;
    sum += term;
    const long double step = (long double)(kz * kz) / ((2.0L * q + 1.0L) * (2.0L * q + 2.0L));
    if (kz == 0.0 || (step < 1.0L && std::fabs((double)term) <= ctrl.rel_tol * std::fabs((double)sum)))
      return double(sum);
    coef *= -step;
  }
  throw SeriesNotConverged("prad_closed_general: elevation series did not converge",
                           double(sum), ctrl.max_terms);
}

}  // namespace detail

// Real symmetric K with P_rad = 0.5 * w^H K w for the given pattern.
inline Eigen::MatrixXd power_kernel(const ArrayGeometry& g, const ElementPattern& pat,
                                    const SeriesControl& ctrl = {}) {
  validate(pat);
  const Eigen::Index N = Eigen::Index(g.size());
  Eigen::MatrixXd K(N, N);
  for (Eigen::Index m = 0; m < N; ++m) {
    for (Eigen::Index n = m; n < N; ++n) {
      const Vec3 d = g.positions[std::size_t(m)] - g.positions[std::size_t(n)];
      double k;
      if (pat.is_isotropic()) {
        k = 4.0 * pi * sinc_k(wavenumber * d.norm());
      } else if (pat.is_cosine()) {
        k = detail::cos_pattern_kernel(d);
      } else {
        const double rho = std::hypot(d.x(), d.y());
        k = 2.0 * pi * detail::general_pair_integral(rho, d.z(), pat, ctrl);
      }
      K(m, n) = k;
      K(n, m) = k;
    }
  }
  return K;
}

inline double prad_from_kernel(const Eigen::MatrixXd& K, const Excitation& e) {
  const Eigen::VectorXcd w = e.weights();
  return 0.5 * (w.adjoint() * (K * w))(0).real();
}

inline double prad_closed_isotropic(const ArrayGeometry& g, const Excitation& e) {
  check_matches(g, e);
  return prad_from_kernel(power_kernel(g, ElementPattern::isotropic()), e);
}

inline double prad_closed_cos(const ArrayGeometry& g, const Excitation& e) {
  check_matches(g, e);
  return prad_from_kernel(power_kernel(g, ElementPattern::cosine()), e);
}

inline double prad_closed_general(const ArrayGeometry& g, const Excitation& e,
                                  const ElementPattern& pat, const SeriesControl& ctrl = {}) {
  check_matches(g, e);
  ElementPattern general = pat;
  // Force the series path even for the patterns that have dedicated kernels.
  const Eigen::Index N = Eigen::Index(g.size());
  Eigen::MatrixXd K(N, N);
  validate(general);
  for (Eigen::Index m = 0; m < N; ++m)
    for (Eigen::Index n = m; n < N; ++n) {
      const Vec3 d = g.positions[std::size_t(m)] - g.positions[std::size_t(n)];
      const double k =
          2.0 * pi * detail::general_pair_integral(std::hypot(d.x(), d.y()), d.z(), general, ctrl);
      K(m, n) = k;
      K(n, m) = k;
    }
  return prad_from_kernel(K, e);
}

inline GainResult gain_from_kernel(const ArrayGeometry& g, const Excitation& e,
                                   const ElementPattern& pat, const Eigen::MatrixXd& K,
                                   double theta_m, double phi_m) {
  GainResult r;
  r.value = pat.board_factor * 4.0 * pi * radiation_intensity(g, e, pat, theta_m, phi_m) /
            prad_from_kernel(K, e);
  r.theta = theta_m;
  r.phi = phi_m;
  r.method = GainMethod::ClosedForm;
  return r;
}

// Closed-form gain toward (theta_m, phi_m); for a steered excitation U there is maximal.
inline GainResult gain_closed(const ArrayGeometry& g, const Excitation& e,
                              const ElementPattern& pat, double theta_m, double phi_m,
                              const SeriesControl& ctrl = {}) {
  check_matches(g, e);
  return gain_from_kernel(g, e, pat, power_kernel(g, pat, ctrl), theta_m, phi_m);
}

inline double effective_area(const ArrayGeometry& g, double theta, double phi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  switch (g.kind) {
    case ArrayKind::Linear: return 0.68 * g.L_x * ct;
    case ArrayKind::Planar: return g.L_x * g.L_y * ct;
    case ArrayKind::Volumetric:
      return g.L_x * g.L_y * ct + g.L_x * g.L_z * st * std::sin(phi) +
             g.L_y * g.L_z * st * std::cos(phi);
  }
  return 0.0;
}

inline double average_effective_area(const ArrayGeometry& g, const AngularSpread& s) {
  validate(s);
  const double t0 = s.theta_0, p0 = s.phi_0;
  const double mean_cos = std::sin(t0) / t0;
  const double mean_sin = (1.0 - std::cos(t0)) / t0;
  const double mean_sinphi = p0 > 1e-8 ? (1.0 - std::cos(p0)) / p0 : 0.5 * p0;
  const double mean_cosphi = p0 > 1e-8 ? std::sin(p0) / p0 : 1.0;
  switch (g.kind) {
    case ArrayKind::Linear: return 0.68 * g.L_x * mean_cos;
    case ArrayKind::Planar: return g.L_x * g.L_y * mean_cos;
    case ArrayKind::Volumetric:
      return g.L_x * g.L_y * mean_cos + g.L_x * g.L_z * mean_sin * mean_sinphi +
             g.L_y * g.L_z * mean_sin * mean_cosphi;
  }
  return 0.0;
}

// Area attributed to one element along x (lambda^2).
inline double element_area(const ArrayGeometry& g) {
  const double width = g.kind == ArrayKind::Linear ? 0.68 : 0.5;
  return width * g.L_x / g.N_x;
}

inline double embedded_efficiency(ArrayKind kind, double S_e, const EfficiencyModel& m = {}) {
  double e = 0.0;
  switch (kind) {
    case ArrayKind::Planar: e = 4.0 * pi * S_e / m.D_e; break;
    case ArrayKind::Volumetric: e = 4.0 * pi * (S_e + m.S_v) / m.D_e; break;
    case ArrayKind::Linear: e = m.a_l * std::sqrt(4.0 * pi * S_e / m.D_e); break;
  }
  return std::min(e, 1.0);
}

inline double embedded_efficiency(const ArrayGeometry& g, const EfficiencyModel& m = {}) {
  return embedded_efficiency(g.kind, element_area(g), m);
}

// Steering directions sampled at cell midpoints of the spread sector.
inline std::vector<std::pair<double, double>> steering_grid(const AngularSpread& s, int n_steer) {
  require(n_steer >= 2, "steering grid: need at least two samples per axis");
  std::vector<std::pair<double, double>> dirs;
  const int n_phi = s.phi_0 > 0.0 ? n_steer : 1;
  for (int i = 0; i < n_steer; ++i)
    for (int j = 0; j < n_phi; ++j)
      dirs.emplace_back((i + 0.5) * s.theta_0 / n_steer,
                        s.phi_0 > 0.0 ? (j + 0.5) * s.phi_0 / n_phi : 0.0);
  return dirs;
}

inline GainResult average_realized_gain(const ArrayGeometry& g, const ElementPattern& pat,
                                        const EfficiencyModel& model, const AngularSpread& s,
                                        int n_steer, GainMethod method, bool realized = true,
                                        const QuadratureOptions& qopt = {}) {
  validate(s);
  GainResult r;
  r.spread = s;
  r.method = method;
  r.realized = realized;
  r.efficiency = realized ? embedded_efficiency(g, model) : 1.0;
  if (method == GainMethod::Physical) {
    r.value = 4.0 * pi * average_effective_area(g, s) * r.efficiency;
    return r;
  }
  const auto dirs = steering_grid(s, n_steer);
  std::vector<double> gains;
  gains.reserve(dirs.size());
  if (method == GainMethod::ClosedForm) {
    const Eigen::MatrixXd K = power_kernel(g, pat);
    for (const auto& [t, p] : dirs)
      gains.push_back(gain_from_kernel(g, steer_excitation(g, t, p), pat, K, t, p).value);
  } else {
    for (const auto& [t, p] : dirs)
      gains.push_back(gain_quadrature(g, steer_excitation(g, t, p), pat, t, p, qopt).value);
  }
  r.value = pairwise_sum(gains) / double(gains.size()) * r.efficiency;
  return r;
}

inline double physical_gain(const ArrayGeometry& g, double theta, double phi) {
  return 4.0 * pi * effective_area(g, theta, phi);
}

}  // namespace hmimo
