#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"

namespace hmimo {

using Vec3 = Eigen::Vector3d;

enum class ArrayKind { Linear, Planar, Volumetric };

// How the height offset alternates across a volumetric grid.
enum class HeightPattern { Checkerboard, Columns, Rows };

inline std::string to_string(ArrayKind k) {
  switch (k) {
    case ArrayKind::Linear: return "linear";
    case ArrayKind::Planar: return "planar";
    case ArrayKind::Volumetric: return "volumetric";
  }
  return "unknown";
}

struct ArrayGeometry {
  ArrayKind kind = ArrayKind::Planar;
  double L_x = 0.0;
  double L_y = 0.0;
  double L_z = 0.0;
  int N_x = 0;
  int N_y = 1;
  double dy = 0.5;
  double dz_offset = 0.0;
  HeightPattern pattern = HeightPattern::Checkerboard;
  std::vector<Vec3> positions;

  std::size_t size() const { return positions.size(); }

  // Geometric element spacing along x.
  double x_spacing() const { return N_x > 1 ? L_x / (N_x - 1) : 0.0; }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : positions) c += p;
    return positions.empty() ? c : Vec3(c / double(positions.size()));
  }

  double circumradius() const {
    const Vec3 c = centroid();
    double r = 0.0;
    for (const auto& p : positions) r = std::max(r, (p - c).norm());
    return r;
  }

  ArrayGeometry translated(const Vec3& offset) const {
    ArrayGeometry g = *this;
    for (auto& p : g.positions) p += offset;
    return g;
  }

  ArrayGeometry centered() const { return translated(-centroid()); }
};

namespace detail {

inline bool raised(HeightPattern pat, int i, int j) {
  switch (pat) {
    case HeightPattern::Checkerboard: return ((i + j) % 2) == 1;
    case HeightPattern::Columns: return (i % 2) == 1;
    case HeightPattern::Rows: return (j % 2) == 1;
  }
  return false;
}

}  // namespace detail

inline ArrayGeometry build_geometry(ArrayKind kind, double L_x, double L_y, int N_x,
                                    double dz_offset = 1.0,
                                    HeightPattern pattern = HeightPattern::Checkerboard,
                                    double dy = 0.5) {
  require(std::isfinite(L_x) && L_x > 0.0, "build_geometry: L_x must be positive");
  require(N_x >= 1, "build_geometry: N_x must be at least 1");
  ArrayGeometry g;
  g.kind = kind;
  g.L_x = L_x;
  g.N_x = N_x;
  g.pattern = pattern;
  if (kind != ArrayKind::Linear) {
    require(std::isfinite(L_y) && L_y > 0.0, "build_geometry: L_y must be positive");
    require(dy > 0.0, "build_geometry: dy must be positive");
    g.L_y = L_y;
    g.dy = dy;
    g.N_y = int(std::floor(L_y / dy + 1e-9)) + 1;
  }
  if (kind == ArrayKind::Volumetric) {
    require(std::isfinite(dz_offset) && dz_offset >= 0.0,
            "build_geometry: dz_offset must be non-negative");
    g.dz_offset = dz_offset;
    g.L_z = dz_offset;
  }
  const double sx = g.x_spacing();
  g.positions.reserve(std::size_t(g.N_x) * std::size_t(g.N_y));
  for (int i = 0; i < g.N_x; ++i) {
    const double x = i * sx;
    for (int j = 0; j < g.N_y; ++j) {
      const double y = kind == ArrayKind::Linear ? 0.0 : j * g.dy;
      double z = 0.0;
      if (kind == ArrayKind::Volumetric && detail::raised(pattern, i, j)) z = dz_offset;
      g.positions.emplace_back(x, y, z);
    }
  }
  return g;
}

// One row per element: index, x, y, z (wavelengths).
inline void write_geometry_table(std::ostream& os, const ArrayGeometry& g) {
  os << "# kind=" << to_string(g.kind) << " N_x=" << g.N_x << " N_y=" << g.N_y
     << " L_x=" << g.L_x << " L_y=" << g.L_y << " L_z=" << g.L_z << "\n";
  os << "index,x,y,z\n";
  char buf[128];
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto& p = g.positions[n];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", n, p.x(), p.y(), p.z());
    os << buf;
  }
}

// Unit vector of the propagation direction (theta from +z, phi from +x).
inline Vec3 direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

struct SteerFarField {
  double theta;
  double phi;
};
struct FocusNearField {
  Vec3 point;
};
struct UniformStrategy {};

using ExcitationStrategy = std::variant<UniformStrategy, SteerFarField, FocusNearField>;

struct Excitation {
  std::vector<double> amplitude;
  std::vector<double> phase;
  ExcitationStrategy strategy = UniformStrategy{};

  std::size_t size() const { return amplitude.size(); }
  cplx weight(std::size_t n) const { return std::polar(amplitude[n], phase[n]); }

  Eigen::VectorXcd weights() const {
    Eigen::VectorXcd w(size());
    for (std::size_t n = 0; n < size(); ++n) w[Eigen::Index(n)] = weight(n);
    return w;
  }

  double amplitude_sum() const {
    double s = 0.0;
    for (double a : amplitude) s += a;
    return s;
  }
};

inline void check_matches(const ArrayGeometry& g, const Excitation& e) {
  require(e.amplitude.size() == g.size() && e.phase.size() == g.size(),
          "excitation length does not match geometry");
}

inline Excitation uniform_excitation(const ArrayGeometry& g) {
  Excitation e;
  e.amplitude.assign(g.size(), 1.0);
  e.phase.assign(g.size(), 0.0);
  return e;
}

inline Excitation steer_excitation(const ArrayGeometry& g, double theta_m, double phi_m) {
  require(std::isfinite(theta_m) && std::isfinite(phi_m),
          "steer_excitation: direction must be finite");
  const Vec3 u = direction(theta_m, phi_m);
  Excitation e;
  e.amplitude.assign(g.size(), 1.0);
  e.phase.resize(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) e.phase[n] = -wavenumber * u.dot(g.positions[n]);
  e.strategy = SteerFarField{theta_m, phi_m};
  return e;
}

inline Excitation focus_excitation(const ArrayGeometry& g, const Vec3& r_f) {
  Excitation e;
  e.amplitude.assign(g.size(), 1.0);
  e.phase.resize(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double d = (r_f - g.positions[n]).norm();
    if (d < 1e-12) throw InvalidArgument("focus_excitation: focal point coincides with element");
    e.phase[n] = wavenumber * d;
  }
  e.strategy = FocusNearField{r_f};
  return e;
}

struct AngularSpread {
  double theta_0 = pi / 3.0;
  double phi_0 = pi;
};

inline void validate(const AngularSpread& s) {
  require(s.theta_0 > 0.0 && s.theta_0 <= pi / 2.0 + 1e-15,
          "angular spread: theta_0 must lie in (0, pi/2]");
  require(s.phi_0 >= 0.0 && s.phi_0 <= 2.0 * pi + 1e-15,
          "angular spread: phi_0 must lie in [0, 2pi]");
}

}  // namespace hmimo
