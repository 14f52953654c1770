#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/channel.hpp"
#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"
#include "hmimo/farfield.hpp"
#include "hmimo/geometry.hpp"
#include "hmimo/nearfield.hpp"
#include "hmimo/parallel.hpp"
#include "hmimo/quadrature.hpp"
#include "hmimo/random.hpp"

namespace hmimo {

struct CapacityConfig {
  double gamma = 10.0;
  int n_realizations = 2000;
  std::uint64_t seed = 1;
};

inline void validate(const CapacityConfig& c) {
  require(c.gamma > 0.0 && std::isfinite(c.gamma), "capacity: SNR must be positive");
  require(c.n_realizations >= 1, "capacity: need at least one realization");
}

inline double capacity_from_eigenvalues(const Eigen::VectorXd& lambda, double gamma, double N_t) {
  double c = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    c += std::log2(1.0 + gamma / N_t * std::max(lambda[i], 0.0));
  return c;
}

// log2 det(I + gamma/N_t H H^H) from the eigenvalues of the smaller Gram matrix.
inline double capacity_once(const Eigen::MatrixXcd& H, double gamma) {
  require(H.allFinite(), "capacity_once: non-finite channel");
  require(gamma > 0.0, "capacity_once: SNR must be positive");
  require(H.cols() >= 1 && H.rows() >= 1, "capacity_once: empty channel");
  const Eigen::MatrixXcd G = H.rows() <= H.cols() ? Eigen::MatrixXcd(H * H.adjoint())
                                                  : Eigen::MatrixXcd(H.adjoint() * H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  return capacity_from_eigenvalues(es.eigenvalues(), gamma, double(H.cols()));
}

struct ErgodicResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

inline ErgodicResult summarize(const std::vector<double>& samples) {
  ErgodicResult r;
  r.n = int(samples.size());
  r.mean = pairwise_sum(samples) / double(r.n);
  if (r.n > 1) {
    std::vector<double> dev(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      dev[i] = (samples[i] - r.mean) * (samples[i] - r.mean);
    r.stderr_ = std::sqrt(pairwise_sum(dev) / double(r.n - 1) / double(r.n));
  }
  return r;
}

// Monte Carlo mean over normalized Kronecker realizations.
inline ErgodicResult ergodic_capacity(const Covariance& R_t, const Covariance& R_r,
                                      const NormalizationPolicy& policy,
                                      const NormalizationGains& gains, const CapacityConfig& cfg) {
  validate(cfg);
  std::vector<double> c(std::size_t(cfg.n_realizations));
  for (int i = 0; i < cfg.n_realizations; ++i) {
    ChannelMatrix ch = kronecker_channel(R_t, R_r, derive_seed(cfg.seed, std::uint64_t(i)));
    ch = normalize(std::move(ch), policy, gains);
    c[std::size_t(i)] = capacity_once(ch.H, cfg.gamma);
  }
  return summarize(c);
}

// Same distribution as ergodic_capacity with R_t = I under matrix policies, sampled in the
// eigenbasis of R_r. Each policy is given by its Frobenius target; all share one realization.
inline std::vector<ErgodicResult> ergodic_capacity_eigen(const Eigen::VectorXd& lambda_r,
                                                         Eigen::Index N_t,
                                                         const std::vector<double>& targets,
                                                         const CapacityConfig& cfg) {
  validate(cfg);
  require(N_t >= 1, "ergodic_capacity_eigen: need at least one user");
  const double lmax = lambda_r.size() ? lambda_r.maxCoeff() : 0.0;
  require(lmax > 0.0, "ergodic_capacity_eigen: correlation has no positive eigenvalue");
  std::vector<double> kept;
  for (Eigen::Index i = 0; i < lambda_r.size(); ++i)
    if (lambda_r[i] > 1e-12 * lmax) kept.push_back(lambda_r[i]);
  const Eigen::Index r = Eigen::Index(kept.size());
  const Eigen::VectorXd sq = Eigen::Map<const Eigen::VectorXd>(kept.data(), r).cwiseSqrt();

  std::vector<std::vector<double>> samples(targets.size(),
                                           std::vector<double>(std::size_t(cfg.n_realizations)));
  const bool small_side = r <= N_t;
  const Eigen::Index n = small_side ? r : N_t;
  for (int i = 0; i < cfg.n_realizations; ++i) {
    Eigen::MatrixXcd A = complex_gaussian(r, N_t, derive_seed(cfg.seed, std::uint64_t(i)));
    A = sq.asDiagonal() * A;
    const double norm2 = A.squaredNorm();
    const Eigen::MatrixXcd G = small_side ? Eigen::MatrixXcd(A * A.adjoint())
                                          : Eigen::MatrixXcd(A.adjoint() * A);
    for (std::size_t p = 0; p < targets.size(); ++p) {
      const double c = cfg.gamma / double(N_t) * targets[p] / norm2;
      Eigen::MatrixXcd M = c * G;
      M.diagonal().array() += 1.0;
      Eigen::LLT<Eigen::MatrixXcd> llt(M);
      require(llt.info() == Eigen::Success, "ergodic_capacity_eigen: factorization failed");
      double ld = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) ld += std::log2(llt.matrixLLT()(k, k).real());
      samples[p][std::size_t(i)] = 2.0 * ld;
    }
  }
  std::vector<ErgodicResult> out;
  for (const auto& s : samples) out.push_back(summarize(s));
  return out;
}

enum class Scenario { QuasiStatic, Ergodic, NearField };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::QuasiStatic: return "quasi-static";
    case Scenario::Ergodic: return "ergodic";
    case Scenario::NearField: return "near-field";
  }
  return "unknown";
}

enum class EfficiencyMode { SchurLoss, RealizedGainTarget };

struct CapacityRow {
  std::string scenario;
  std::string topology;
  std::string policy;
  int N_x = 0;
  double spacing_lambda = 0.0;
  double R_lambda = std::nan("");
  double snr_dB = 10.0;
  double capacity_mean = 0.0;
  double capacity_stderr = 0.0;
  std::uint64_t seed = 0;
};

struct FarFieldSweepSpec {
  Scenario scenario = Scenario::QuasiStatic;
  ArrayKind kind = ArrayKind::Planar;
  double L_x = 5.0;
  double L_y = 5.0;
  double dz_offset = 1.0;
  HeightPattern pattern = HeightPattern::Checkerboard;
  double dy = 0.5;
  std::vector<int> N_x;
  int n_users = 0;  // 0 selects 10 for linear and 100 otherwise
  double snr_dB = 10.0;
  int n_realizations = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> policies{"traditional", "em-physical", "em-analytical"};
  AngularSpread spread{};
  int n_steer = 7;
  SectorSpectrum spectrum{};
  double kappa = 1.0;
  ElementPattern element = ElementPattern::cosine(2.0);
  EfficiencyModel efficiency{};
  EfficiencyMode efficiency_mode = EfficiencyMode::SchurLoss;
  double gain_scale = 1.0 / pi;
  CorrelationQuadrature quadrature{};
  unsigned threads = 1;
};

inline int default_users(ArrayKind k) { return k == ArrayKind::Linear ? 10 : 100; }

inline std::uint64_t point_seed(std::uint64_t root, ArrayKind kind, std::size_t index) {
  return derive_seed(root, std::uint64_t(index), 1 + std::uint64_t(kind));
}

// Frobenius targets for the named policies at one sweep point.
inline std::vector<double> far_field_targets(const FarFieldSweepSpec& s, const ArrayGeometry& g,
                                             Eigen::Index N_t) {
  const bool realized = s.scenario == Scenario::Ergodic;
  std::vector<double> t;
  for (const auto& name : s.policies) {
    if (name == "traditional") {
      t.push_back(policy_target({PolicyKind::Traditional, 1.0}, {}, Eigen::Index(g.size()), N_t));
      continue;
    }
    GainMethod m;
    if (name == "em-physical") m = GainMethod::Physical;
    else if (name == "em-analytical") m = GainMethod::ClosedForm;
    else if (name == "em-quadrature") m = GainMethod::Quadrature;
    else throw InvalidArgument("capacity sweep: unknown policy '" + name + "'");
    const GainResult avg = average_realized_gain(g, s.element, s.efficiency, s.spread, s.n_steer, m,
                                                 realized);
    NormalizationGains gains;
    gains.G_r = avg.value;
    t.push_back(policy_target({PolicyKind::TxNC_RxC, s.gain_scale}, gains, Eigen::Index(g.size()), N_t));
  }
  return t;
}

inline std::vector<CapacityRow> capacity_sweep(const FarFieldSweepSpec& s) {
  require(s.scenario != Scenario::NearField, "capacity_sweep: use the near-field sweep");
  require(!s.N_x.empty(), "capacity_sweep: empty N_x list");
  require(!s.policies.empty(), "capacity_sweep: empty policy list");
  const Eigen::Index N_t = s.n_users > 0 ? s.n_users : default_users(s.kind);
  const double gamma = from_db(s.snr_dB);
  std::vector<std::vector<CapacityRow>> per_point(s.N_x.size());
  parallel_for(s.N_x.size(), s.threads, [&](std::size_t i) {
    const ArrayGeometry g = build_geometry(s.kind, s.L_x, s.L_y, s.N_x[i], s.dz_offset, s.pattern, s.dy);
    CorrelationMatrix R = correlation_matrix(g, s.element, s.spectrum, s.kappa, s.quadrature);
    Eigen::VectorXd lambda = R.eigenvalues();
    if (s.scenario == Scenario::Ergodic && s.efficiency_mode == EfficiencyMode::SchurLoss) {
      // Uniform efficiency: the Schur product scales the spectrum, and the
      // electromagnetic target carries the realized gain either way.
      lambda *= embedded_efficiency(g, s.efficiency);
    }
    const std::vector<double> targets = far_field_targets(s, g, N_t);
    CapacityConfig cfg{gamma, s.n_realizations, point_seed(s.seed, s.kind, i)};
    const auto res = ergodic_capacity_eigen(lambda, N_t, targets, cfg);
    for (std::size_t p = 0; p < s.policies.size(); ++p) {
      CapacityRow row;
      row.scenario = to_string(s.scenario);
      row.topology = to_string(s.kind);
      row.policy = s.policies[p];
      row.N_x = s.N_x[i];
      row.spacing_lambda = g.x_spacing();
      row.snr_dB = s.snr_dB;
      row.capacity_mean = res[p].mean;
      row.capacity_stderr = res[p].stderr_;
      row.seed = cfg.seed;
      per_point[i].push_back(row);
    }
  });
  std::vector<CapacityRow> rows;
  for (auto& v : per_point)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

struct NearFieldSweepSpec {
  std::vector<double> R;
  ArrayKind rx_kind = ArrayKind::Planar;
  double L = 5.0;
  int rx_N_x = 0;  // 0 selects 11 for planar and 21 for volumetric
  double dz_offset = 1.0;
  HeightPattern pattern = HeightPattern::Checkerboard;
  int tx_N_x = 11;
  double snr_dB = 10.0;
  std::vector<std::string> policies{"nf-far-field", "nf-focus-scalar", "nf-focus-dyadic",
                                    "nf-steer-dyadic"};
  double gain_scale = 1.0 / pi;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

inline ArrayGeometry mirrored_z(const ArrayGeometry& g) {
  ArrayGeometry m = g;
  for (auto& p : m.positions) p.z() = -p.z();
  return m;
}

// Broadside gain of an array toward a point R beyond its centroid under one beamforming mode.
inline double broadside_gain(const ArrayGeometry& g, double R, const std::string& policy) {
  const Vec3 target = g.centroid() + Vec3(0.0, 0.0, R);
  if (policy == "nf-far-field") {
    const Excitation e = steer_excitation(g, 0.0, 0.0);
    return far_gain_dipole(g, e, Pol::x, 0.0, 0.0, radiated_power_dipole(g, e, Pol::x));
  }
  if (policy == "nf-steer-dyadic") {
    const Excitation e = steer_excitation(g, 0.0, 0.0);
    return near_gain(g, e, Pol::x, Pol::x, target, radiated_power_dipole(g, e, Pol::x));
  }
  const Excitation e = focus_excitation(g, target);
  const double P = radiated_power_dipole(g, e, Pol::x);
  if (policy == "nf-focus-dyadic") return near_gain(g, e, Pol::x, Pol::x, target, P);
  if (policy == "nf-focus-scalar")
    return near_gain(g, e, Pol::x, Pol::x, target, P, FieldApproach::Scalar);
  throw InvalidArgument("near-field sweep: unknown policy '" + policy + "'");
}

inline std::vector<CapacityRow> nearfield_capacity_sweep(const NearFieldSweepSpec& s) {
  require(!s.R.empty(), "near-field sweep: empty distance list");
  require(s.rx_kind != ArrayKind::Linear, "near-field sweep: receiver must be planar or volumetric");
  const int rx_n = s.rx_N_x > 0 ? s.rx_N_x : (s.rx_kind == ArrayKind::Planar ? 11 : 21);
  const ArrayGeometry tx = build_geometry(ArrayKind::Planar, s.L, s.L, s.tx_N_x).centered();
  const ArrayGeometry rx0 = build_geometry(s.rx_kind, s.L, s.L, rx_n, s.dz_offset, s.pattern);
  const double gamma = from_db(s.snr_dB);
  std::vector<std::vector<CapacityRow>> per_point(s.R.size());
  parallel_for(s.R.size(), s.threads, [&](std::size_t i) {
    const double R = s.R[i];
    require(R > 0.0, "near-field sweep: distances must be positive");
    const ChannelMatrix ch = nearfield_polarimetric_channel(tx, rx0, R);
    const ArrayGeometry rx_placed = place_receiver(tx, rx0, R);
    // Receive gain by reciprocity: the mirrored receiver radiating toward +z.
    const ArrayGeometry rx_mirror = mirrored_z(rx_placed);
    for (const auto& name : s.policies) {
      NormalizationGains gains;
      gains.G_t = broadside_gain(tx, R, name);
      const double d_rx = -tx.centroid().z() - rx_mirror.centroid().z();
      gains.G_r = broadside_gain(rx_mirror, d_rx, name);
      ChannelMatrix H{ch.block(Pol::x, Pol::x), {}, std::nullopt, 0};
      H = normalize(std::move(H), {PolicyKind::TxC_RxC, s.gain_scale}, gains);
      CapacityRow row;
      row.scenario = to_string(Scenario::NearField);
      row.topology = to_string(s.rx_kind);
      row.policy = name;
      row.N_x = rx_n;
      row.spacing_lambda = rx0.x_spacing();
      row.R_lambda = R;
      row.snr_dB = s.snr_dB;
      row.capacity_mean = capacity_once(H.H, gamma);
      row.capacity_stderr = 0.0;
      row.seed = s.seed;
      per_point[i].push_back(row);
    }
  });
  std::vector<CapacityRow> rows;
  for (auto& v : per_point)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

}  // namespace hmimo
