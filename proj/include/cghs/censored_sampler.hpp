#pragma once

#include <cmath>
#include <vector>

#include "cghs/data.hpp"
#include "cghs/distributions.hpp"
#include "cghs/fit.hpp"
#include "cghs/gibbs.hpp"
#include "cghs/nodewise.hpp"
#include "cghs/parallel.hpp"
#include "cghs/rng.hpp"

namespace cghs {

/// Observed cells copied; left-censored cells start at c - |N(0,1)|,
/// right-censored at c + |N(0,1)|, missing cells at 0.
inline LatentMatrix init_latent_censored(const ObservedData& data, RngStream& rng) {
  LatentMatrix z(data.rows(), data.cols());
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      switch (data.status(i, j)) {
        case CellStatus::Observed: z(i, j) = data.values(i, j); break;
        case CellStatus::CensoredLeft:
          z(i, j) = *data.thresholds[static_cast<std::size_t>(j)] - std::abs(rng.normal());
          break;
        case CellStatus::CensoredRight:
          z(i, j) = *data.thresholds[static_cast<std::size_t>(j)] + std::abs(rng.normal());
          break;
        case CellStatus::Missing: z(i, j) = 0.0; break;
      }
    }
  }
  return z;
}

/// Conditional mean of Z_ij given the rest of row i under node j's regression.
inline double node_conditional_mean(Index i, Index j, const LatentMatrix& z, const NodeState& state) {
  double mu = 0.0;
  for (Index k = 0; k < state.size(); ++k) mu += z(i, other_column(j, k)) * state.theta[k];
  return mu;
}

/// Redraws latent cell (i, j) from N(z_{i,-j}^T theta_j, sigma2_j), truncated
/// to the side allowed by its status. Observed cells are left alone.
inline void impute_censored_cell(Index i, Index j, LatentMatrix& z, const NodeState& state, const ObservedData& data,
                                 RngStream& rng) {
  const CellStatus s = data.status(i, j);
  if (s == CellStatus::Observed) return;
  const double mu = node_conditional_mean(i, j, z, state);
  const double sd = std::sqrt(state.sigma2);
  switch (s) {
    case CellStatus::CensoredLeft:
      z(i, j) = sample_trunc_normal_upper(mu, sd, *data.thresholds[static_cast<std::size_t>(j)], rng);
      break;
    case CellStatus::CensoredRight:
      z(i, j) = sample_trunc_normal_lower(mu, sd, *data.thresholds[static_cast<std::size_t>(j)], rng);
      break;
    case CellStatus::Missing: z(i, j) = mu + sd * rng.normal(); break;
    case CellStatus::Observed: break;
  }
}

/// Gibbs sampler for left- and/or right-censored data (missing cells, if
/// any, are imputed without truncation). Rows are scanned cell by cell in
/// column order; each row owns a substream keyed by (sweep, row).
inline CensoredFit run_censored_ghs(const ObservedData& data, const SamplerConfig& cfg) {
  cfg.validate();
  data.validate();

  RngStream init_rng(cfg.seed, {0, 0, StreamPurpose::Initialize});
  LatentMatrix z0 = init_latent_censored(data, init_rng);
  const std::vector<Index> rows = detail::incomplete_rows(data);

  return detail::run_gibbs(data, cfg, std::move(z0), [&](int sweep, detail::ChainState& chain) {
    parallel_for(static_cast<Index>(rows.size()), chain.threads, [&](Index r) {
      const Index i = rows[static_cast<std::size_t>(r)];
      RngStream rng(cfg.seed, {static_cast<std::uint64_t>(sweep), static_cast<std::uint64_t>(i),
                               StreamPurpose::Impute});
      for (Index j = 0; j < data.cols(); ++j) {
        impute_censored_cell(i, j, chain.z, chain.nodes[static_cast<std::size_t>(j)], data, rng);
      }
    });
  });
}

}  // namespace cghs
