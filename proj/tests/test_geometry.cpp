#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hmimo/geometry.hpp"

using namespace hmimo;

namespace {

double wrap(double a) { return std::remainder(a, 2.0 * pi); }

}  // namespace

TEST(Geometry, LinearElevenPoints) {
  const auto g = build_geometry(ArrayKind::Linear, 5.0, 0.0, 11);
  ASSERT_EQ(g.size(), 11u);
  for (int i = 0; i < 11; ++i) {
    EXPECT_NEAR(g.positions[i].x(), 0.5 * i, 1e-15);
    EXPECT_EQ(g.positions[i].y(), 0.0);
    EXPECT_EQ(g.positions[i].z(), 0.0);
  }
  EXPECT_DOUBLE_EQ(g.x_spacing(), 0.5);
}

TEST(Geometry, PlanarGrid) {
  const auto g = build_geometry(ArrayKind::Planar, 5.0, 5.0, 11);
  ASSERT_EQ(g.size(), 121u);
  std::set<std::pair<long, long>> cells;
  for (const auto& p : g.positions) {
    EXPECT_EQ(p.z(), 0.0);
    cells.insert({std::lround(p.x() * 2), std::lround(p.y() * 2)});
  }
  EXPECT_EQ(cells.size(), 121u);
}

TEST(Geometry, VolumetricCheckerboard) {
  const auto g = build_geometry(ArrayKind::Volumetric, 5.0, 5.0, 21, 1.0);
  ASSERT_EQ(g.size(), 21u * 11u);
  EXPECT_EQ(g.N_y, 11);
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 11; ++j) {
      const auto& p = g.positions[std::size_t(i * 11 + j)];
      EXPECT_NEAR(p.x(), 0.25 * i, 1e-12);
      EXPECT_NEAR(p.y(), 0.5 * j, 1e-12);
      EXPECT_EQ(p.z(), ((i + j) % 2) ? 1.0 : 0.0);
    }
}

TEST(Geometry, HeightPatternsAndCounts) {
  for (auto pat : {HeightPattern::Checkerboard, HeightPattern::Columns, HeightPattern::Rows})
    for (int n : {1, 2, 7, 20}) {
      const auto g = build_geometry(ArrayKind::Volumetric, 5.0, 3.0, n, 0.7, pat);
      EXPECT_EQ(g.size(), std::size_t(n) * 7u);
      for (const auto& p : g.positions) EXPECT_TRUE(p.z() == 0.0 || p.z() == 0.7);
      for (const auto& p : g.positions) {
        EXPECT_GE(p.x(), 0.0);
        EXPECT_LE(p.x(), 5.0 + 1e-12);
      }
    }
}

TEST(Geometry, SingleElementAtOrigin) {
  for (auto kind : {ArrayKind::Linear, ArrayKind::Planar}) {
    const auto g = build_geometry(kind, 5.0, 5.0, 1);
    EXPECT_EQ(g.positions[0].x(), 0.0);
  }
}

TEST(Geometry, ZeroOffsetVolumetricEqualsPlanar) {
  const auto v = build_geometry(ArrayKind::Volumetric, 5.0, 5.0, 9, 0.0);
  const auto p = build_geometry(ArrayKind::Planar, 5.0, 5.0, 9);
  ASSERT_EQ(v.size(), p.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ((v.positions[i] - p.positions[i]).norm(), 0.0);
}

TEST(Geometry, RejectsBadInput) {
  EXPECT_THROW(build_geometry(ArrayKind::Linear, 0.0, 0.0, 3), InvalidArgument);
  EXPECT_THROW(build_geometry(ArrayKind::Linear, -1.0, 0.0, 3), InvalidArgument);
  EXPECT_THROW(build_geometry(ArrayKind::Planar, 5.0, 5.0, 0), InvalidArgument);
  EXPECT_THROW(build_geometry(ArrayKind::Planar, 5.0, 0.0, 3), InvalidArgument);
  EXPECT_THROW(build_geometry(ArrayKind::Volumetric, 5.0, 5.0, 3, -1.0), InvalidArgument);
}

TEST(Geometry, TableDump) {
  const auto g = build_geometry(ArrayKind::Linear, 1.0, 0.0, 3);
  std::ostringstream os;
  write_geometry_table(os, g);
  const std::string s = os.str();
  EXPECT_NE(s.find("index,x,y,z\n0,0,0,0\n1,0.5,0,0\n2,1,0,0\n"), std::string::npos);
}

TEST(Steer, BroadsidePhases) {
  const auto p = build_geometry(ArrayKind::Planar, 5.0, 5.0, 11);
  for (double a : steer_excitation(p, 0.0, 0.0).phase) EXPECT_EQ(a, 0.0);
  const auto v = build_geometry(ArrayKind::Volumetric, 5.0, 5.0, 5, 1.0);
  const auto e = steer_excitation(v, 0.0, 0.0);
  for (std::size_t n = 0; n < v.size(); ++n) EXPECT_NEAR(e.phase[n], -wavenumber * v.positions[n].z(), 1e-14);
}

TEST(Steer, EndfirePairDiffersByPi) {
  const auto g = build_geometry(ArrayKind::Linear, 0.5, 0.0, 2);
  const auto e = steer_excitation(g, pi / 2, 0.0);
  EXPECT_NEAR(std::fabs(e.phase[1] - e.phase[0]), pi, 1e-12);
}

TEST(Steer, RaisedElementBroadside) {
  ArrayGeometry g;
  g.positions = {Vec3(0, 0, 1)};
  EXPECT_NEAR(steer_excitation(g, 0.0, 0.0).phase[0], -2.0 * pi, 1e-14);
}

TEST(Steer, PhaseDifferencesAreTranslationInvariant) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  const auto g = build_geometry(ArrayKind::Volumetric, 2.0, 2.0, 4, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 off(U(rng), U(rng), U(rng));
    const double th = std::fabs(U(rng)) / 3.0, ph = U(rng);
    const auto a = steer_excitation(g, th, ph);
    const auto b = steer_excitation(g.translated(off), th, ph);
    for (std::size_t n = 1; n < g.size(); ++n)
      EXPECT_NEAR(wrap((a.phase[n] - a.phase[0]) - (b.phase[n] - b.phase[0])), 0.0, 1e-10);
  }
}

TEST(Focus, SingleElementZeroPhaseAtFocus) {
  ArrayGeometry g;
  g.positions = {Vec3(0.3, -0.2, 0.1)};
  const Vec3 f(1.0, 2.0, 3.0);
  const auto e = focus_excitation(g, f);
  const double R = (f - g.positions[0]).norm();
  EXPECT_NEAR(e.phase[0], wavenumber * R, 1e-14);
  // Scalar field phase at the focus: alpha - kR.
  EXPECT_NEAR(wrap(e.phase[0] - wavenumber * R), 0.0, 1e-12);
}

// The residual is the Fresnel term k rho^2 / 2R, so the aperture is kept at 2 x 2 wavelengths.
TEST(Focus, FarLimitMatchesBroadsideSteering) {
  const auto g = build_geometry(ArrayKind::Planar, 2.0, 2.0, 5).centered();
  const auto f = focus_excitation(g, Vec3(0, 0, 1e4));
  const auto s = steer_excitation(g, 0.0, 0.0);
  double worst = 0.0;
  for (std::size_t n = 1; n < g.size(); ++n)
    worst = std::max(worst, std::fabs(wrap((f.phase[n] - f.phase[0]) - (s.phase[n] - s.phase[0]))));
  EXPECT_LT(worst, 1e-3);
}

TEST(Focus, SymmetricPair) {
  ArrayGeometry g;
  g.positions = {Vec3(-0.5, 0, 0), Vec3(0.5, 0, 0)};
  const auto e = focus_excitation(g, Vec3(0, 1.3, 2.1));
  EXPECT_DOUBLE_EQ(e.phase[0], e.phase[1]);
}

TEST(Focus, CoincidentFocusRejected) {
  ArrayGeometry g;
  g.positions = {Vec3(0, 0, 0)};
  EXPECT_THROW(focus_excitation(g, Vec3(0, 0, 0)), InvalidArgument);
}

TEST(Excitation, LengthMismatchRejected) {
  const auto g = build_geometry(ArrayKind::Linear, 1.0, 0.0, 3);
  Excitation e = uniform_excitation(g);
  e.amplitude.pop_back();
  EXPECT_THROW(check_matches(g, e), InvalidArgument);
}

TEST(Spread, Validation) {
  EXPECT_THROW(validate(AngularSpread{0.0, pi}), InvalidArgument);
  EXPECT_THROW(validate(AngularSpread{2.0, pi}), InvalidArgument);
  EXPECT_NO_THROW(validate(AngularSpread{pi / 3, 0.0}));
}
