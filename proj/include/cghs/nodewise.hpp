#pragma once

#include <cmath>
#include <span>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "cghs/data.hpp"
#include "cghs/distributions.hpp"
#include "cghs/errors.hpp"
#include "cghs/rng.hpp"

namespace cghs {

/// Horseshoe regression state of one node: column j regressed on the other
/// p - 1 columns. theta, lambda2 and nu are indexed over the other columns in
/// increasing order (column k maps to slot k for k < j, k - 1 for k > j).
struct NodeState {
  Eigen::VectorXd theta;
  double sigma2 = 1.0;
  Eigen::VectorXd lambda2;
  Eigen::VectorXd nu;
  double tau2 = 1.0;
  double xi = 1.0;

  /// theta = 0, every scale = 1.
  static NodeState neutral(Index m) {
    NodeState s;
    s.theta = Eigen::VectorXd::Zero(m);
    s.lambda2 = Eigen::VectorXd::Ones(m);
    s.nu = Eigen::VectorXd::Ones(m);
    return s;
  }

  Index size() const noexcept { return theta.size(); }
};

struct InverseGammaParams {
  double shape;
  double rate;
};

/// Column of Z corresponding to coefficient slot k of node j.
constexpr Index other_column(Index j, Index k) noexcept { return k < j ? k : k + 1; }

/// The latent matrix of one sweep together with its Gram matrix Z^T Z.
/// Node updates read it concurrently; it is never modified.
class SweepDesign {
 public:
  explicit SweepDesign(const LatentMatrix& z) : z_(z) {
    gram_.noalias() = z.transpose() * z;
  }

  const LatentMatrix& z() const noexcept { return z_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  Index n() const noexcept { return z_.rows(); }
  Index p() const noexcept { return z_.cols(); }

  /// X^T X for node j (Gram with row and column j removed).
  Eigen::MatrixXd xtx(Index j) const {
    const Index m = p() - 1;
    Eigen::MatrixXd out(m, m);
    for (Index b = 0; b < m; ++b)
      for (Index a = 0; a < m; ++a) out(a, b) = gram_(other_column(j, a), other_column(j, b));
    return out;
  }

  /// X^T y for node j.
  Eigen::VectorXd xty(Index j) const {
    const Index m = p() - 1;
    Eigen::VectorXd out(m);
    for (Index a = 0; a < m; ++a) out[a] = gram_(other_column(j, a), j);
    return out;
  }

  /// ||y - X theta||^2 for node j, evaluated on Z directly.
  double rss(Index j, const Eigen::VectorXd& theta) const {
    Eigen::VectorXd r = z_.col(j);
    for (Index k = 0; k < theta.size(); ++k) r.noalias() -= theta[k] * z_.col(other_column(j, k));
    return r.squaredNorm();
  }

 private:
  const LatentMatrix& z_;
  Eigen::MatrixXd gram_;
};

namespace detail {

inline Eigen::LLT<Eigen::MatrixXd> theta_system(Index j, const SweepDesign& design, const NodeState& state) {
  Eigen::MatrixXd a = design.xtx(j);
  a.diagonal().array() += 1.0 / (state.tau2 * state.lambda2.array());
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || !a.allFinite()) {
    throw NumericalError("node " + std::to_string(j + 1) + ": Cholesky factorization of the coefficient system failed");
  }
  return llt;
}

}  // namespace detail

/// Mean of the Gaussian full conditional of theta_j:
/// (X^T X + diag(1 / (tau2 lambda2)))^{-1} X^T y.
inline Eigen::VectorXd theta_conditional_mean(Index j, const SweepDesign& design, const NodeState& state) {
  return detail::theta_system(j, design, state).solve(design.xty(j));
}

/// theta_j ~ N(mu, sigma2 A^{-1}), drawn as mu + sigma L^{-T} u with L L^T = A.
inline void update_theta(Index j, const SweepDesign& design, NodeState& state, RngStream& rng) {
  const auto llt = detail::theta_system(j, design, state);
  const Eigen::VectorXd mean = llt.solve(design.xty(j));
  const Eigen::MatrixXd factor = llt.matrixL();
  state.theta = sample_gaussian_precision(mean, factor, std::sqrt(state.sigma2), rng);
}

inline InverseGammaParams sigma2_conditional(Index n, double rss, const SamplerConfig& cfg) {
  return {cfg.a0 + 0.5 * static_cast<double>(n), cfg.b0 + 0.5 * rss};
}

inline void update_sigma2(Index j, const SweepDesign& design, NodeState& state, const SamplerConfig& cfg,
                          RngStream& rng) {
  const auto ig = sigma2_conditional(design.n(), design.rss(j, state.theta), cfg);
  state.sigma2 = sample_inverse_gamma(ig.shape, ig.rate, rng);
}

/// Rate of the lambda2_k conditional: 1/nu_k + theta_k^2 / (2 sigma2 tau2).
inline double local_scale_rate(const NodeState& state, Index k) {
  return 1.0 / state.nu[k] + state.theta[k] * state.theta[k] / (2.0 * state.sigma2 * state.tau2);
}

/// Makalic-Schmidt local step: lambda2_k ~ IG(1, rate), then nu_k ~ IG(1, 1 + 1/lambda2_k).
inline void update_local_scales(NodeState& state, RngStream& rng) {
  for (Index k = 0; k < state.size(); ++k) {
    state.lambda2[k] = sample_inverse_gamma(1.0, local_scale_rate(state, k), rng);
    state.nu[k] = sample_inverse_gamma(1.0, 1.0 + 1.0 / state.lambda2[k], rng);
  }
}

/// tau2 conditional: IG((m + 1)/2, 1/xi + sum_k theta_k^2 / (2 sigma2 lambda2_k)).
inline InverseGammaParams global_scale_conditional(const NodeState& state) {
  const double m = static_cast<double>(state.size());
  const double sum = (state.theta.array().square() / state.lambda2.array()).sum();
  return {0.5 * (m + 1.0), 1.0 / state.xi + sum / (2.0 * state.sigma2)};
}

inline void update_global_scale(NodeState& state, RngStream& rng) {
  const auto ig = global_scale_conditional(state);
  state.tau2 = sample_inverse_gamma(ig.shape, ig.rate, rng);
  state.xi = sample_inverse_gamma(1.0, 1.0 + 1.0 / state.tau2, rng);
}

/// One full node update in fixed order: theta, sigma2, local scales, global scale.
inline void update_node(Index j, const SweepDesign& design, NodeState& state, const SamplerConfig& cfg,
                        RngStream& rng) {
  update_theta(j, design, state, rng);
  update_sigma2(j, design, state, cfg, rng);
  update_local_scales(state, rng);
  update_global_scale(state, rng);
}

/// Replaces each off-diagonal pair by its average. The result is exactly
/// symmetric and the diagonal is untouched.
inline void symmetrize_in_place(Eigen::MatrixXd& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
}

/// Raw nodewise precision: Omega_jj = 1/sigma2_j, Omega_{-j,j} = -theta_j / sigma2_j.
inline Eigen::MatrixXd raw_precision(std::span<const NodeState> states) {
  const auto p = static_cast<Index>(states.size());
  Eigen::MatrixXd omega(p, p);
  for (Index j = 0; j < p; ++j) {
    const auto& s = states[static_cast<std::size_t>(j)];
    if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2)) {
      throw InvalidParameter("node " + std::to_string(j + 1) + ": residual variance must be positive and finite");
    }
    if (s.size() != p - 1) throw InvalidParameter("node " + std::to_string(j + 1) + ": state has wrong dimension");
    const double inv = 1.0 / s.sigma2;
    omega(j, j) = inv;
    for (Index k = 0; k < p - 1; ++k) omega(other_column(j, k), j) = -s.theta[k] * inv;
  }
  return omega;
}

inline PrecisionDraw reconstruct_precision(std::span<const NodeState> states) {
  PrecisionDraw omega = raw_precision(states);
  symmetrize_in_place(omega);
  return omega;
}

/// Eigendecomposition with eigenvalues clipped from below at floor.
struct ClippedSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  bool clipped = false;
};

inline ClippedSpectrum clipped_spectrum(const Eigen::MatrixXd& symmetric, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the precision matrix failed");
  ClippedSpectrum out{es.eigenvalues(), es.eigenvectors(), false};
  for (Index i = 0; i < out.eigenvalues.size(); ++i) {
    if (out.eigenvalues[i] < floor) {
      out.eigenvalues[i] = floor;
      out.clipped = true;
    }
  }
  return out;
}

/// Nearest matrix (in spectrum) with every eigenvalue >= floor. Inputs that
/// already satisfy this come back unchanged.
inline PrecisionDraw project_pd(const PrecisionDraw& omega, double floor) {
  if (!(floor > 0.0)) throw InvalidParameter("project_pd: floor must be positive");
  const auto spec = clipped_spectrum(omega, floor);
  if (!spec.clipped) return omega;
  PrecisionDraw out = spec.eigenvectors * spec.eigenvalues.asDiagonal() * spec.eigenvectors.transpose();
  symmetrize_in_place(out);
  return out;
}

}  // namespace cghs
