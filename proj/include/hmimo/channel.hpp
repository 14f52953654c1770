#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmimo/constants.hpp"
#include "hmimo/error.hpp"
#include "hmimo/farfield.hpp"
#include "hmimo/geometry.hpp"
#include "hmimo/nearfield.hpp"
#include "hmimo/quadrature.hpp"
#include "hmimo/random.hpp"

namespace hmimo {

enum class PolicyKind { Traditional, TxNC_RxC, TxC_RxC, PerUserVector, PolarimetricBlock };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Traditional: return "traditional";
    case PolicyKind::TxNC_RxC: return "tx-noncoherent-rx-coherent";
    case PolicyKind::TxC_RxC: return "tx-coherent-rx-coherent";
    case PolicyKind::PerUserVector: return "per-user-vector";
    case PolicyKind::PolarimetricBlock: return "polarimetric-block";
  }
  return "unknown";
}

struct NormalizationPolicy {
  PolicyKind kind = PolicyKind::Traditional;
  double gain_scale = 1.0 / pi;
};

using PolGrid = std::array<std::array<double, 3>, 3>;

// Unscaled gains; the policy's gain_scale is applied during normalization.
struct NormalizationGains {
  std::optional<double> G_t;
  std::optional<double> G_r;
  std::vector<double> per_user;
  std::optional<PolGrid> G_t_pq;
  std::optional<PolGrid> G_r_pq;
};

// Hermitian positive semi-definite matrix with its eigendecomposition cached.
class Covariance {
 public:
  Covariance() = default;

  // Negative eigenvalues down to -floor * max(1, lambda_max) are clipped to zero.
  explicit Covariance(Eigen::MatrixXcd m, double floor = 1e-10) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), "covariance: matrix must be square");
    require(m_.allFinite(), "covariance: non-finite entries");
    const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    require(herm <= 1e-10 * std::max(1.0, m_.cwiseAbs().maxCoeff()),
            "covariance: matrix is not Hermitian");
    m_ = 0.5 * (m_ + m_.adjoint()).eval();
    decompose();
    const double scale = std::max(1.0, evals_.size() ? evals_.maxCoeff() : 1.0);
    const double lo = evals_.size() ? evals_.minCoeff() : 0.0;
    if (lo < -floor * scale) throw InvalidArgument("covariance: not positive semi-definite");
    if (lo < 0.0) {
      const Eigen::VectorXd d = m_.diagonal().real();
      Eigen::VectorXd clipped = evals_.cwiseMax(0.0);
      m_ = evecs_ * clipped.asDiagonal() * evecs_.adjoint();
      m_.diagonal() = d.cast<cplx>();
      decompose();
      evals_ = evals_.cwiseMax(0.0);
    }
  }

  static Covariance identity(Eigen::Index n) {
    return Covariance(Eigen::MatrixXcd::Identity(n, n));
  }

  const Eigen::MatrixXcd& matrix() const { return m_; }
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const Eigen::MatrixXcd& eigenvectors() const { return evecs_; }
  Eigen::Index size() const { return m_.rows(); }

  bool is_identity() const {
    return (m_ - Eigen::MatrixXcd::Identity(size(), size())).cwiseAbs().maxCoeff() == 0.0;
  }

  const Eigen::MatrixXcd& sqrt() const { return sqrt_; }

 private:
  void decompose() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_);
    require(es.info() == Eigen::Success, "covariance: eigendecomposition failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    const Eigen::VectorXd s = evals_.cwiseMax(0.0).cwiseSqrt();
    sqrt_ = evecs_ * s.asDiagonal() * evecs_.adjoint();
  }

  Eigen::MatrixXcd m_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXcd evecs_;
  Eigen::MatrixXcd sqrt_;
};

// Unit-diagonal covariance.
using CorrelationMatrix = Covariance;

inline const Eigen::MatrixXcd& hermitian_sqrt(const Covariance& r) { return r.sqrt(); }

// Power spectrum uniform over a spherical sector, zero elsewhere.
struct SectorSpectrum {
  double theta_min = 0.0;
  double theta_max = pi / 3.0;
  double phi_min = 0.0;
  double phi_max = 2.0 * pi;
  double P_theta = 1.0;
  double P_phi = 1.0;

  static SectorSpectrum full_sphere() { return {0.0, pi, 0.0, 2.0 * pi, 1.0, 1.0}; }
  static SectorSpectrum cone(double theta_max) { return {0.0, theta_max, 0.0, 2.0 * pi, 1.0, 1.0}; }

  bool azimuthally_symmetric() const {
    return phi_min == 0.0 && std::fabs(phi_max - 2.0 * pi) < 1e-15;
  }
};

inline void validate(const SectorSpectrum& s) {
  require(s.theta_min >= 0.0 && s.theta_max <= pi + 1e-15 && s.theta_max > s.theta_min,
          "power spectrum: invalid theta range");
  require(s.phi_max > s.phi_min && s.phi_max - s.phi_min <= 2.0 * pi + 1e-15,
          "power spectrum: invalid phi range");
  require(s.P_theta >= 0.0 && s.P_phi >= 0.0, "power spectrum: levels must be non-negative");
}

struct CorrelationQuadrature {
  int n_theta = 128;
  int n_phi = 128;
};

namespace detail {

inline std::vector<std::pair<double, double>> gl_on(double a, double b, int n) {
  const auto gl = gauss_legendre(n);
  std::vector<std::pair<double, double>> out{std::size_t(n)};
  for (int i = 0; i < n; ++i)
    out[std::size_t(i)] = {0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[std::size_t(i)],
                           0.5 * (b - a) * gl.weights[std::size_t(i)]};
  return out;
}

}  // namespace detail

// Spatial correlation from per-element far-field patterns over the propagation spectrum.
// Only the theta-polarized pattern is non-zero for the scalar pattern model.
inline CorrelationMatrix correlation_matrix(const ArrayGeometry& g, const ElementPattern& pat,
                                            const SectorSpectrum& spec, double kappa = 1.0,
                                            const CorrelationQuadrature& q = {}) {
  validate(spec);
  validate(pat);
  require(kappa >= 0.0, "correlation_matrix: XPD must be non-negative");
  const Eigen::Index N = Eigen::Index(g.size());
  const double level = kappa * spec.P_theta;
  const auto th = detail::gl_on(spec.theta_min, spec.theta_max, q.n_theta);
  // Weight of each theta node: pattern power * spectrum * sin(theta) * quadrature weight.
  std::vector<double> wt(th.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double t = th[i].first;
    wt[i] = level * pat.power(std::cos(t), std::sin(t)) * std::sin(t) * th[i].second;
    norm += wt[i];
  }
  if (!(norm > 0.0)) throw InvalidArgument("correlation_matrix: power spectrum is not normalizable");
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(N, N);

  if (spec.azimuthally_symmetric()) {
    // The phi integral of exp(jk rho sin cos(phi - phi_d)) is 2 pi J0(k rho sin).
    std::map<std::pair<long long, long long>, cplx> cache;
    auto key = [](double v) { return (long long)std::llround(v * 1e9); };
    for (Eigen::Index m = 0; m < N; ++m)
      for (Eigen::Index n = m + 1; n < N; ++n) {
        const Vec3 d = g.positions[std::size_t(m)] - g.positions[std::size_t(n)];
        const double rho = std::hypot(d.x(), d.y());
        const auto k = std::make_pair(key(rho), key(d.z()));
        auto it = cache.find(k);
        if (it == cache.end()) {
          cplx acc{0.0, 0.0};
          for (std::size_t i = 0; i < th.size(); ++i) {
            const double t = th[i].first;
            acc += wt[i] * bessel_j(0, wavenumber * rho * std::sin(t)) *
                   std::polar(1.0, wavenumber * d.z() * std::cos(t));
          }
          it = cache.emplace(k, acc / norm).first;
        }
        C(m, n) = it->second;
        C(n, m) = std::conj(it->second);
      }
  } else {
    const auto ph = detail::gl_on(spec.phi_min, spec.phi_max, q.n_phi);
    double phi_w = 0.0;
    for (const auto& p : ph) phi_w += p.second;
    std::vector<Vec3> dirs;
    std::vector<double> w;
    for (std::size_t i = 0; i < th.size(); ++i)
      for (const auto& p : ph) {
        dirs.push_back(direction(th[i].first, p.first));
        w.push_back(wt[i] * p.second);
      }
    const double total = norm * phi_w;
    for (Eigen::Index m = 0; m < N; ++m)
      for (Eigen::Index n = m + 1; n < N; ++n) {
        const Vec3 d = g.positions[std::size_t(m)] - g.positions[std::size_t(n)];
        cplx acc{0.0, 0.0};
        for (std::size_t s = 0; s < dirs.size(); ++s)
          acc += w[s] * std::polar(1.0, wavenumber * d.dot(dirs[s]));
        C(m, n) = acc / total;
        C(n, m) = std::conj(C(m, n));
      }
  }
  return CorrelationMatrix(C);
}

// Rank-one efficiency matrix sqrt(e) sqrt(e)^T.
struct EfficiencyMatrix {
  Eigen::VectorXd e;

  static EfficiencyMatrix uniform(Eigen::Index n, double value) {
    return {Eigen::VectorXd::Constant(n, value)};
  }

  Eigen::MatrixXd xi() const {
    const Eigen::VectorXd s = e.cwiseSqrt();
    return s * s.transpose();
  }
};

inline Covariance apply_efficiency(const Covariance& R, const EfficiencyMatrix& X) {
  require(X.e.size() == R.size(), "apply_efficiency: shape mismatch");
  require((X.e.array() > 0.0).all() && (X.e.array() <= 1.0).all(),
          "apply_efficiency: efficiencies must lie in (0, 1]");
  return Covariance(R.matrix().cwiseProduct(X.xi().cast<cplx>()));
}

struct ChannelMatrix {
  // N_r x N_t; for polarimetric channels blocks[3*p + q] holds field p from source q.
  Eigen::MatrixXcd H;
  std::vector<Eigen::MatrixXcd> blocks;
  std::optional<NormalizationPolicy> applied_policy;
  std::uint64_t realization_seed = 0;

  bool polarimetric() const { return blocks.size() == 9; }
  Eigen::MatrixXcd& block(Pol p, Pol q) { return blocks[std::size_t(3 * int(p) + int(q))]; }
  const Eigen::MatrixXcd& block(Pol p, Pol q) const {
    return blocks[std::size_t(3 * int(p) + int(q))];
  }
};

// Correlated Rayleigh realization with users along columns:
// H = (R_r^{1/2})^T H_w (R_t^{1/2})^T, the transpose of the Tx-by-Rx Kronecker form.
inline ChannelMatrix kronecker_channel(const Covariance& R_t, const Covariance& R_r,
                                       std::uint64_t seed) {
  ChannelMatrix ch;
  ch.realization_seed = seed;
  const Eigen::MatrixXcd Hw = complex_gaussian(R_r.size(), R_t.size(), seed);
  Eigen::MatrixXcd H = Hw;
  if (!R_r.is_identity()) H = R_r.sqrt().transpose() * H;
  if (!R_t.is_identity()) H = H * R_t.sqrt().transpose();
  ch.H = std::move(H);
  return ch;
}

// Places the Rx array R_sep above the Tx centroid, laterally centered.
inline ArrayGeometry place_receiver(const ArrayGeometry& tx, const ArrayGeometry& rx, double R_sep) {
  const Vec3 ct = tx.centroid();
  const Vec3 cr = rx.centroid();
  double zmin = rx.positions.empty() ? 0.0 : rx.positions.front().z();
  for (const auto& p : rx.positions) zmin = std::min(zmin, p.z());
  return rx.translated(Vec3(ct.x() - cr.x(), ct.y() - cr.y(), ct.z() + R_sep - zmin));
}

inline ChannelMatrix nearfield_polarimetric_channel(const ArrayGeometry& tx, const ArrayGeometry& rx,
                                                    double R_sep) {
  require(R_sep > 0.0, "nearfield_polarimetric_channel: separation must be positive");
  const ArrayGeometry rxp = place_receiver(tx, rx, R_sep);
  const Eigen::Index Nr = Eigen::Index(rxp.size()), Nt = Eigen::Index(tx.size());
  ChannelMatrix ch;
  ch.blocks.assign(9, Eigen::MatrixXcd(Nr, Nt));
  for (Eigen::Index i = 0; i < Nr; ++i)
    for (Eigen::Index j = 0; j < Nt; ++j) {
      const Vec3& a = rxp.positions[std::size_t(i)];
      const Vec3& b = tx.positions[std::size_t(j)];
      if ((a - b).norm() < 1e-9) throw InvalidArgument("nearfield_polarimetric_channel: overlapping elements");
      const CMat3 G = electric_dyadic(a, b);
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) ch.blocks[std::size_t(3 * p + q)](i, j) = G(p, q);
    }
  ch.H = ch.blocks[0];
  return ch;
}

// Frobenius target of a matrix policy for an N_r x N_t channel.
inline double policy_target(const NormalizationPolicy& pol, const NormalizationGains& gains,
                            Eigen::Index N_r, Eigen::Index N_t) {
  const double s = pol.gain_scale;
  double t = 0.0;
  switch (pol.kind) {
    case PolicyKind::Traditional: t = double(N_t) * double(N_r); break;
    case PolicyKind::TxNC_RxC:
      require(gains.G_r.has_value(), "normalize: policy requires G_r");
      t = double(N_t) * (*gains.G_r * s);
      break;
    case PolicyKind::TxC_RxC:
      require(gains.G_t.has_value() && gains.G_r.has_value(), "normalize: policy requires G_t and G_r");
      t = (*gains.G_t * s) * (*gains.G_r * s);
      break;
    default: throw InvalidArgument("policy_target: not a matrix policy");
  }
  require(t > 0.0 && std::isfinite(t), "normalize: target norm must be positive");
  return t;
}

inline void scale_to(Eigen::MatrixXcd& M, double target) {
  const double n2 = M.squaredNorm();
  if (!(n2 > 0.0)) throw InvalidArgument("normalize: zero-norm channel");
  M *= std::sqrt(target / n2);
}

inline ChannelMatrix normalize(ChannelMatrix ch, const NormalizationPolicy& pol,
                               const NormalizationGains& gains = {}) {
  require(pol.gain_scale > 0.0, "normalize: gain_scale must be positive");
  const double s = pol.gain_scale;
  switch (pol.kind) {
    case PolicyKind::Traditional:
    case PolicyKind::TxNC_RxC:
    case PolicyKind::TxC_RxC:
      scale_to(ch.H, policy_target(pol, gains, ch.H.rows(), ch.H.cols()));
      break;
    case PolicyKind::PerUserVector: {
      require(Eigen::Index(gains.per_user.size()) == ch.H.cols(),
              "normalize: per-user gains must match the user count");
      for (Eigen::Index c = 0; c < ch.H.cols(); ++c) {
        const double t = gains.per_user[std::size_t(c)] * s;
        require(t > 0.0, "normalize: per-user target must be positive");
        Eigen::MatrixXcd col = ch.H.col(c);
        scale_to(col, t);
        ch.H.col(c) = col;
      }
      break;
    }
    case PolicyKind::PolarimetricBlock: {
      require(ch.polarimetric(), "normalize: polarimetric policy needs a block channel");
      require(gains.G_t_pq.has_value() && gains.G_r_pq.has_value(),
              "normalize: polarimetric policy requires G_t^pq and G_r^pq");
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          const double t = ((*gains.G_t_pq)[std::size_t(p)][std::size_t(q)] * s) *
                           ((*gains.G_r_pq)[std::size_t(p)][std::size_t(q)] * s);
          auto& B = ch.blocks[std::size_t(3 * p + q)];
          if (t == 0.0) {
            B.setZero();
            continue;
          }
          require(t > 0.0, "normalize: block target must be non-negative");
          scale_to(B, t);
        }
      ch.H = ch.blocks[0];
      break;
    }
  }
  ch.applied_policy = pol;
  return ch;
}

}  // namespace hmimo
