#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cghs/errors.hpp"
#include "cghs/fit.hpp"
#include "cghs/simulation.hpp"

namespace cghs {

/// Unordered variable pair, stored with i < j (0-based).
struct Edge {
  Index i;
  Index j;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct PosteriorSummary {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd median;
  Eigen::MatrixXd ci_lower;
  Eigen::MatrixXd ci_upper;
  double level = 0.95;
  Index draws = 0;
  std::vector<Edge> edges;
};

/// Sample quantile of sorted data with linear interpolation between order
/// statistics (h = (N - 1) prob).
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Entrywise mean, median and equal-tailed level-credible interval over the
/// retained draws. An off-diagonal pair is an edge iff its interval excludes 0.
inline PosteriorSummary summarize(const DrawStore& draws, double level = 0.95) {
  if (draws.size() < 2) throw InvalidInput("summarize needs at least 2 retained draws");
  if (!(level >= 0.0 && level < 1.0)) throw InvalidInput("credible level must lie in [0, 1)");
  const Index p = draws.dim();
  PosteriorSummary s;
  s.level = level;
  s.draws = draws.size();
  s.mean.resize(p, p);
  s.median.resize(p, p);
  s.ci_lower.resize(p, p);
  s.ci_upper.resize(p, p);
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> buf(static_cast<std::size_t>(draws.size()));
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const Eigen::VectorXd c = draws.chain(i, j);
      std::copy(c.data(), c.data() + c.size(), buf.begin());
      std::sort(buf.begin(), buf.end());
      const double mean = c.mean();
      const double med = quantile_sorted(buf, 0.5);
      const double lo = quantile_sorted(buf, tail);
      const double hi = quantile_sorted(buf, 1.0 - tail);
      s.mean(i, j) = s.mean(j, i) = mean;
      s.median(i, j) = s.median(j, i) = med;
      s.ci_lower(i, j) = s.ci_lower(j, i) = lo;
      s.ci_upper(i, j) = s.ci_upper(j, i) = hi;
      if (i < j && (lo > 0.0 || hi < 0.0)) s.edges.push_back({i, j});
    }
  }
  std::sort(s.edges.begin(), s.edges.end());
  return s;
}

/// Squared Frobenius norm of the difference.
inline double frob_sq_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw InvalidParameter("frob_sq_error: dimension mismatch");
  }
  return (estimate - truth).squaredNorm();
}

inline std::vector<Edge> true_edges(const TruthSpec& truth) {
  std::vector<Edge> out;
  for (const auto& [i, j] : truth.edges()) out.push_back({i, j});
  return out;
}

struct Recovery {
  double tpr;
  double fdr;
};

/// |selected \ true| / max(|selected|, 1).
inline double false_discovery_rate(std::span<const Edge> selected, std::span<const Edge> truth) {
  const std::set<Edge> t(truth.begin(), truth.end());
  std::size_t false_pos = 0;
  for (const auto& e : selected) false_pos += !t.contains(e);
  return static_cast<double>(false_pos) / static_cast<double>(std::max<std::size_t>(selected.size(), 1));
}

inline Recovery tpr_fdr(std::span<const Edge> selected, std::span<const Edge> truth) {
  if (truth.empty()) throw InvalidParameter("tpr_fdr: the true graph has no edges");
  const std::set<Edge> s(selected.begin(), selected.end());
  std::size_t hits = 0;
  for (const auto& e : truth) hits += s.contains(e);
  return {static_cast<double>(hits) / static_cast<double>(truth.size()), false_discovery_rate(selected, truth)};
}

inline Recovery tpr_fdr(std::span<const Edge> selected, const TruthSpec& truth) {
  const auto t = true_edges(truth);
  return tpr_fdr(selected, t);
}

namespace detail {

/// Lag autocovariances of a centered chain, computed on demand.
class Autocovariance {
 public:
  explicit Autocovariance(const Eigen::Ref<const Eigen::VectorXd>& chain) : d_(chain.array() - chain.mean()) {
    c0_ = at(0);
    if (!(c0_ > 0.0)) throw InvalidInput("zero-variance chain");
  }

  Index size() const noexcept { return d_.size(); }
  double at(Index lag) const {
    const Index n = d_.size();
    return d_.head(n - lag).dot(d_.tail(n - lag)) / static_cast<double>(n);
  }
  double rho(Index lag) const { return at(lag) / c0_; }

 private:
  Eigen::VectorXd d_;
  double c0_ = 0.0;
};

}  // namespace detail

/// Sample autocorrelation at lags 0..max_lag (rho(0) = 1).
inline Eigen::VectorXd acf(const Eigen::Ref<const Eigen::VectorXd>& chain, Index max_lag) {
  if (max_lag < 0 || chain.size() <= max_lag) {
    throw InvalidInput("acf: chain length " + std::to_string(chain.size()) + " must exceed max_lag " +
                       std::to_string(max_lag));
  }
  const detail::Autocovariance ac(chain);
  Eigen::VectorXd out(max_lag + 1);
  out[0] = 1.0;
  for (Index l = 1; l <= max_lag; ++l) out[l] = ac.rho(l);
  return out;
}

/// Effective sample size N / (1 + 2 sum rho), with the sum cut by Geyer's
/// initial positive sequence over pairs rho(2k) + rho(2k+1). Clamped to N.
inline double ess(const Eigen::Ref<const Eigen::VectorXd>& chain) {
  if (chain.size() < 2) throw InvalidInput("ess needs at least 2 draws");
  const detail::Autocovariance ac(chain);
  const Index n = ac.size();
  double tau = -1.0;
  for (Index k = 0; 2 * k + 1 < n; ++k) {
    const double pair = ac.rho(2 * k) + ac.rho(2 * k + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  const double nd = static_cast<double>(n);
  if (!(tau > 1.0)) return nd;
  return std::min(nd, nd / tau);
}

}  // namespace cghs
