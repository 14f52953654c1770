#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hmimo/capacity.hpp"
#include "oracles.hpp"

using namespace hmimo;

namespace {

Eigen::MatrixXcd random_unitary(Eigen::Index n, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(complex_gaussian(n, n, seed));
  return qr.householderQ();
}

// 2x2 i.i.d. Rayleigh with its own generator and the explicit 2x2 determinant.
std::pair<double, double> iid_2x2_oracle(double gamma, int n, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    cplx h[4];
    for (auto& x : h) x = cplx(nd(eng), nd(eng));
    // Traditional scaling to ||H||_F^2 = 4.
    double f = 0.0;
    for (auto& x : h) f += std::norm(x);
    const double a = gamma / 2.0 * 4.0 / f;
    const double p = 1.0 + a * (std::norm(h[0]) + std::norm(h[1]));
    const double q = 1.0 + a * (std::norm(h[2]) + std::norm(h[3]));
    const cplx o = a * (h[0] * std::conj(h[2]) + h[1] * std::conj(h[3]));
    const double c = std::log2(p * q - std::norm(o));
    s += c;
    s2 += c * c;
  }
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / (n - 1))};
}

}  // namespace

TEST(CapacityOnce, ScalarChannel) {
  Eigen::MatrixXcd H(1, 1);
  H(0, 0) = std::polar(1.0, 0.4);
  EXPECT_NEAR(capacity_once(H, 10.0), std::log2(11.0), 1e-14);
  EXPECT_NEAR(capacity_once(H, 10.0), 3.459, 1e-3);
}

TEST(CapacityOnce, RankOne) {
  const Eigen::VectorXcd a = complex_gaussian(6, 1, 1).normalized();
  const Eigen::VectorXcd b = complex_gaussian(4, 1, 2).normalized();
  const double G = 37.0;
  const Eigen::MatrixXcd H = std::sqrt(G) * a * b.adjoint();
  EXPECT_NEAR(capacity_once(H, 3.0), std::log2(1.0 + 3.0 * G / 4.0), 1e-12);
}

TEST(CapacityOnce, ParallelChannels) {
  for (int n : {1, 3, 8}) EXPECT_NEAR(capacity_once(Eigen::MatrixXcd::Identity(n, n), n), n, 1e-12);
}

TEST(CapacityOnce, UnitaryInvariance) {
  const Eigen::MatrixXcd H = complex_gaussian(5, 3, 9);
  const double c = capacity_once(H, 4.0);
  EXPECT_NEAR(capacity_once(random_unitary(5, 10) * H, 4.0), c, 1e-11);
  EXPECT_NEAR(capacity_once(H * random_unitary(3, 11), 4.0), c, 1e-11);
}

TEST(CapacityOnce, WideAndTallAgreeWithFullDeterminant) {
  for (auto [r, c] : {std::pair{3, 7}, std::pair{7, 3}}) {
    const Eigen::MatrixXcd H = complex_gaussian(r, c, std::uint64_t(r * 10 + c));
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(r, r) + (2.0 / c) * H * H.adjoint();
    const double ref = std::log2(std::abs(M.determinant()));
    EXPECT_NEAR(capacity_once(H, 2.0), ref, 1e-11);
  }
}

TEST(CapacityOnce, MonotoneInSnr) {
  const Eigen::MatrixXcd H = complex_gaussian(4, 4, 21);
  double prev = 0.0;
  for (double g : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double c = capacity_once(H, g);
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(CapacityOnce, TargetScalingLaw) {
  const Eigen::MatrixXcd H = complex_gaussian(6, 3, 22);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.adjoint() * H);
  for (double s : {0.5, 2.0, 7.0}) {
    const double expect = capacity_from_eigenvalues(s * es.eigenvalues(), 10.0, 3.0);
    EXPECT_NEAR(capacity_once(std::sqrt(s) * H, 10.0), expect, 1e-12);
  }
}

TEST(CapacityOnce, Errors) {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(2, 2);
  EXPECT_THROW(capacity_once(H, 0.0), InvalidArgument);
  H(0, 1) = cplx(std::nan(""), 0.0);
  EXPECT_THROW(capacity_once(H, 1.0), InvalidArgument);
  EXPECT_EQ(capacity_once(Eigen::MatrixXcd::Zero(3, 2), 5.0), 0.0);
}

TEST(Summarize, MeanAndStandardError) {
  const auto r = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(summarize({3.0}).stderr_, 0.0);
}

TEST(Ergodic, IidTwoByTwoOracle) {
  const CapacityConfig cfg{10.0, 20000, 7};
  const auto r = ergodic_capacity(Covariance::identity(2), Covariance::identity(2), {PolicyKind::Traditional, 1.0},
                                  {}, cfg);
  const auto [m, se] = iid_2x2_oracle(10.0, 200000, 3);
  EXPECT_LT(std::fabs(r.mean - m), 2.0 * std::hypot(r.stderr_, se));
}

TEST(Ergodic, DoublingRealizationsIsConsistent) {
  const auto R = Covariance::identity(3);
  const auto a = ergodic_capacity(R, R, {PolicyKind::Traditional, 1.0}, {}, {10.0, 2000, 4});
  const auto b = ergodic_capacity(R, R, {PolicyKind::Traditional, 1.0}, {}, {10.0, 4000, 4});
  EXPECT_LT(std::fabs(a.mean - b.mean), 2.0 * a.stderr_);
}

TEST(Ergodic, FullyCorrelatedReceiverCollapses) {
  const Eigen::Index Nr = 5, Nt = 3;
  const Covariance Rr(Eigen::MatrixXcd::Ones(Nr, Nr));
  // Unnormalized realizations follow log2(1 + gamma N_r |h|^2 / N_t) with h the common row.
  for (int i = 0; i < 20; ++i) {
    const auto ch = kronecker_channel(Covariance::identity(Nt), Rr, std::uint64_t(100 + i));
    const double h2 = ch.H.row(0).squaredNorm();
    EXPECT_NEAR(capacity_once(ch.H, 10.0), std::log2(1.0 + 10.0 * Nr * h2 / Nt), 1e-9);
  }
  // With the Frobenius norm pinned the single eigenvalue is N_t N_r, so every sample is the same.
  const auto r = ergodic_capacity(Covariance::identity(Nt), Rr, {PolicyKind::Traditional, 1.0}, {}, {10.0, 200, 1});
  EXPECT_NEAR(r.mean, std::log2(1.0 + 10.0 * Nr), 1e-9);
  EXPECT_LT(r.stderr_, 1e-9);
}

TEST(Ergodic, Deterministic) {
  const auto g = build_geometry(ArrayKind::Planar, 1.0, 1.0, 3);
  const auto Rr = correlation_matrix(g, ElementPattern::cosine(), SectorSpectrum::cone(pi / 3));
  const CapacityConfig cfg{10.0, 300, 99};
  const auto a = ergodic_capacity(Covariance::identity(4), Rr, {PolicyKind::Traditional, 1.0}, {}, cfg);
  const auto b = ergodic_capacity(Covariance::identity(4), Rr, {PolicyKind::Traditional, 1.0}, {}, cfg);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

// With a diagonal receive covariance in ascending order both samplers consume the same
// Gaussian draws, so the results agree sample for sample.
TEST(Ergodic, EigenDomainMatchesLiteralSampler) {
  const Eigen::Index Nt = 4;
  Eigen::VectorXd lam(5);
  lam << 0.2, 0.5, 0.9, 1.4, 2.0;
  Eigen::MatrixXcd D = lam.cast<cplx>().asDiagonal();
  const Covariance Rr(D);
  const CapacityConfig cfg{from_db(10.0), 400, 31};
  NormalizationGains gains;
  gains.G_r = 60.0;
  const NormalizationPolicy pol{PolicyKind::TxNC_RxC, 1.0 / pi};
  const auto lit = ergodic_capacity(Covariance::identity(Nt), Rr, pol, gains, cfg);
  const double t = policy_target(pol, gains, 5, Nt);
  const auto eig = ergodic_capacity_eigen(lam, Nt, {t, 5.0 * Nt}, cfg);
  EXPECT_NEAR(eig[0].mean, lit.mean, 1e-10);
  EXPECT_NEAR(eig[0].stderr_, lit.stderr_, 1e-10);
  const auto trad =
      ergodic_capacity(Covariance::identity(Nt), Rr, {PolicyKind::Traditional, 1.0}, {}, cfg);
  EXPECT_NEAR(eig[1].mean, trad.mean, 1e-10);
}

TEST(Ergodic, EigenDomainMatchesLiteralInDistribution) {
  const auto g = build_geometry(ArrayKind::Planar, 2.0, 2.0, 5);
  const auto Rr = correlation_matrix(g, ElementPattern::cosine(), SectorSpectrum::cone(pi / 3));
  const Eigen::Index Nt = 6;
  const auto lit =
      ergodic_capacity(Covariance::identity(Nt), Rr, {PolicyKind::Traditional, 1.0}, {}, {10.0, 3000, 1});
  const auto eig = ergodic_capacity_eigen(Rr.eigenvalues(), Nt, {double(Nt) * double(g.size())}, {10.0, 3000, 2});
  EXPECT_LT(std::fabs(lit.mean - eig[0].mean), 3.0 * std::hypot(lit.stderr_, eig[0].stderr_));
}

TEST(Ergodic, RejectsBadConfig) {
  const auto R = Covariance::identity(2);
  EXPECT_THROW(ergodic_capacity(R, R, {PolicyKind::Traditional, 1.0}, {}, {10.0, 0, 1}), InvalidArgument);
  EXPECT_THROW(ergodic_capacity(R, R, {PolicyKind::Traditional, 1.0}, {}, {-1.0, 5, 1}), InvalidArgument);
  EXPECT_THROW(ergodic_capacity_eigen(Eigen::VectorXd::Zero(3), 2, {1.0}, {}), InvalidArgument);
}

TEST(Sweep, RowsAndThreadIndependence) {
  FarFieldSweepSpec s;
  s.kind = ArrayKind::Planar;
  s.L_x = s.L_y = 2.0;
  s.N_x = {3, 5};
  s.n_users = 4;
  s.n_realizations = 30;
  s.quadrature = {48, 48};
  s.policies = {"traditional", "em-physical"};
  const auto a = capacity_sweep(s);
  s.threads = 2;
  const auto b = capacity_sweep(s);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].capacity_mean, b[i].capacity_mean);
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].scenario, "quasi-static");
    EXPECT_TRUE(std::isnan(a[i].R_lambda));
    EXPECT_GT(a[i].capacity_mean, 0.0);
  }
  EXPECT_NEAR(a[2].spacing_lambda, 0.5, 1e-15);
  EXPECT_NE(a[0].seed, a[2].seed);
  s.policies = {"bogus"};
  EXPECT_THROW(capacity_sweep(s), InvalidArgument);
}

TEST(Sweep, ErgodicSchurLossScalesSpectrum) {
  // Uniform efficiency in (0, 1) lowers the ergodic electromagnetic capacity below the
  // quasi-static run on the same seeds.
  FarFieldSweepSpec s;
  s.L_x = s.L_y = 2.0;
  s.N_x = {9};
  s.n_users = 4;
  s.n_realizations = 50;
  s.quadrature = {48, 48};
  s.policies = {"traditional"};
  const auto qs = capacity_sweep(s);
  s.scenario = Scenario::Ergodic;
  const auto er = capacity_sweep(s);
  EXPECT_NEAR(qs[0].capacity_mean, er[0].capacity_mean, 1e-12);
  EXPECT_LT(embedded_efficiency(build_geometry(ArrayKind::Planar, 2.0, 2.0, 9)), 1.0);
}

TEST(NearFieldSweep, MirroringAndPolicies) {
  const auto g = build_geometry(ArrayKind::Volumetric, 2.0, 2.0, 5, 1.0);
  const auto m = mirrored_z(g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(m.positions[i].z(), -g.positions[i].z());
  EXPECT_THROW(broadside_gain(g, 3.0, "nf-unknown"), InvalidArgument);

  NearFieldSweepSpec s;
  s.R = {3.0, 50.0};
  s.L = 2.0;
  s.tx_N_x = 5;
  s.rx_N_x = 5;
  const auto rows = nearfield_capacity_sweep(s);
  ASSERT_EQ(rows.size(), 8u);
  auto at = [&](double R, const std::string& p) {
    for (const auto& r : rows)
      if (r.R_lambda == R && r.policy == p) return r.capacity_mean;
    return std::nan("");
  };
  EXPECT_LT(at(3.0, "nf-steer-dyadic"), at(3.0, "nf-focus-dyadic"));
  EXPECT_NEAR(at(50.0, "nf-steer-dyadic") / at(50.0, "nf-focus-dyadic"), 1.0, 1e-2);
  s.rx_kind = ArrayKind::Linear;
  EXPECT_THROW(nearfield_capacity_sweep(s), InvalidArgument);
}
