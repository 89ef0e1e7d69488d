#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "cghs/data.hpp"
#include "cghs/errors.hpp"
#include "cghs/fit.hpp"
#include "cghs/nodewise.hpp"
#include "cghs/parallel.hpp"
#include "cghs/rng.hpp"

namespace cghs::detail {

/// Mutable state of one chain, visible to the imputation step.
struct ChainState {
  LatentMatrix z;
  std::vector<NodeState> nodes;
  /// Symmetrized precision reconstructed at the end of the previous sweep
  /// (identity before the first sweep).
  PrecisionDraw omega;
  int threads = 1;
};

/// Shared sweep loop: impute(sweep, chain) refreshes the latent matrix, then
/// every node is updated against the frozen Z and Omega is rebuilt.
template <typename Impute>
GibbsFit run_gibbs(const ObservedData& data, const SamplerConfig& cfg, LatentMatrix z0, Impute&& impute) {
  const auto start = std::chrono::steady_clock::now();
  const Index p = data.cols();

  ChainState chain;
  chain.z = std::move(z0);
  chain.nodes.assign(static_cast<std::size_t>(p), NodeState::neutral(p - 1));
  chain.omega = PrecisionDraw::Identity(p, p);
  chain.threads = resolve_threads(cfg.threads);

  GibbsFit fit;
  fit.config = cfg;
  fit.draws = DrawStore(p, cfg.retained_count());

  for (int sweep = 1; sweep <= cfg.n_iter; ++sweep) {
    try {
      impute(sweep, chain);
      verify_latent(data, chain.z);
      ++fit.sweeps_verified;

      const SweepDesign design(chain.z);
      parallel_for(p, chain.threads, [&](Index j) {
        RngStream rng(cfg.seed, {static_cast<std::uint64_t>(sweep), static_cast<std::uint64_t>(j),
                                 StreamPurpose::NodeUpdate});
        update_node(j, design, chain.nodes[static_cast<std::size_t>(j)], cfg, rng);
      });

      chain.omega = reconstruct_precision(chain.nodes);
    } catch (const NumericalError& e) {
      throw NumericalError("sweep " + std::to_string(sweep) + ": " + e.what());
    }
    if (cfg.keeps(sweep)) fit.draws.push(chain.omega);
  }

  fit.final_states = std::move(chain.nodes);
  fit.final_latent = std::move(chain.z);
  fit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fit;
}

/// Rows that contain at least one cell other than Observed.
inline std::vector<Index> incomplete_rows(const ObservedData& data) {
  std::vector<Index> rows;
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      if (data.status(i, j) != CellStatus::Observed) {
        rows.push_back(i);
        break;
      }
    }
  }
  return rows;
}

}  // namespace cghs::detail
