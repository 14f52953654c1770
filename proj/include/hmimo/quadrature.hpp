#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"

namespace hmimo {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need at least one node");
  GaussLegendre gl;
  gl.nodes.resize(std::size_t(n));
  gl.weights.resize(std::size_t(n));
  // Returns P_n(x) and writes P_n'(x).
  auto legendre = [n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[std::size_t(i)] = -x;
    gl.nodes[std::size_t(n - 1 - i)] = x;
    gl.weights[std::size_t(i)] = w;
    gl.weights[std::size_t(n - 1 - i)] = w;
  }
  if (n % 2 == 1) gl.nodes[std::size_t(n / 2)] = 0.0;
  return gl;
}

// Order-fixed summation so reductions do not depend on scheduling.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

// Product rule on the unit sphere: Gauss-Legendre in cos(theta), trapezoid in phi.
struct SphereRule {
  int n_theta = 256;
  int n_phi = 512;
};

struct SphereNodes {
  std::vector<double> cos_theta, sin_theta, w_theta;
  std::vector<double> cos_phi, sin_phi;
  double w_phi = 0.0;
};

inline SphereNodes sphere_nodes(const SphereRule& rule) {
  require(rule.n_theta >= 2 && rule.n_phi >= 2, "sphere rule: too few nodes");
  SphereNodes s;
  const auto gl = gauss_legendre(rule.n_theta);
  s.cos_theta = gl.nodes;
  s.w_theta = gl.weights;
  s.sin_theta.resize(gl.nodes.size());
  for (std::size_t i = 0; i < gl.nodes.size(); ++i)
    s.sin_theta[i] = std::sqrt(std::max(0.0, 1.0 - gl.nodes[i] * gl.nodes[i]));
  s.cos_phi.resize(std::size_t(rule.n_phi));
  s.sin_phi.resize(std::size_t(rule.n_phi));
  for (int p = 0; p < rule.n_phi; ++p) {
    const double phi = 2.0 * pi * p / rule.n_phi;
    s.cos_phi[std::size_t(p)] = std::cos(phi);
    s.sin_phi[std::size_t(p)] = std::sin(phi);
  }
  s.w_phi = 2.0 * pi / rule.n_phi;
  return s;
}

// Integrates f(cos_theta, sin_theta, cos_phi, sin_phi) over the sphere.
template <class F>
double integrate_sphere(const SphereRule& rule, F&& f) {
  const SphereNodes s = sphere_nodes(rule);
  std::vector<double> rows(s.cos_theta.size());
  std::vector<double> ring(s.cos_phi.size());
  for (std::size_t i = 0; i < s.cos_theta.size(); ++i) {
    for (std::size_t p = 0; p < s.cos_phi.size(); ++p)
      ring[p] = f(s.cos_theta[i], s.sin_theta[i], s.cos_phi[p], s.sin_phi[p]);
    rows[i] = s.w_theta[i] * s.w_phi * pairwise_sum(ring);
  }
  return pairwise_sum(rows);
}

}  // namespace hmimo
