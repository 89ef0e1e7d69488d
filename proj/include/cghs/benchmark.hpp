#pragma once

#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cghs/censored_sampler.hpp"
#include "cghs/diagnostics.hpp"
#include "cghs/errors.hpp"
#include "cghs/missing_sampler.hpp"
#include "cghs/parallel.hpp"
#include "cghs/simulation.hpp"

namespace cghs {

enum class Mechanism { None, FixedCensor, QuantileCensor, Mcar };

inline std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::None: return "none";
    case Mechanism::FixedCensor: return "fixed-censor";
    case Mechanism::QuantileCensor: return "quantile-censor";
    case Mechanism::Mcar: return "mcar";
  }
  return "?";
}

inline Mechanism parse_mechanism(std::string_view s) {
  for (auto m : {Mechanism::None, Mechanism::FixedCensor, Mechanism::QuantileCensor, Mechanism::Mcar}) {
    if (s == mechanism_name(m)) return m;
  }
  throw InvalidInput("unknown mechanism '" + std::string(s) + "' (expected none, fixed-censor, quantile-censor or mcar)");
}

/// One row of a simulation table.
struct Design {
  std::string table;
  Setting setting = Setting::Tridiagonal;
  Index n = 200;
  Index p = 10;
  Mechanism mechanism = Mechanism::None;
  /// Censored or missing proportion (quantile-censor, mcar).
  double q = 0.0;

  std::string label() const {
    std::string s = setting == Setting::Tridiagonal ? "Setting I" : "Setting II";
    switch (mechanism) {
      case Mechanism::FixedCensor:
      case Mechanism::None: s += ", n = " + std::to_string(n) + ", p = " + std::to_string(p); break;
      case Mechanism::QuantileCensor: s += ", " + std::to_string(std::lround(q * 100)) + "% censored"; break;
      case Mechanism::Mcar:
        s += ", n = " + std::to_string(n) + ", p = " + std::to_string(p) + ", missing " +
             std::to_string(std::lround(q * 100)) + "%";
        break;
    }
    return s;
  }

  bool censored() const { return mechanism == Mechanism::FixedCensor || mechanism == Mechanism::QuantileCensor; }
};

/// The six simulation tables: T1-T3 censored, T4-T6 missing. Each lists
/// Setting I then Setting II for every level of the varied factor.
inline std::vector<Design> table_designs(std::string_view id) {
  std::vector<Design> rows;
  auto both = [&](Design d) {
    for (auto s : {Setting::Tridiagonal, Setting::EquicorrelatedBlock}) {
      d.setting = s;
      rows.push_back(d);
    }
  };
  const std::string t(id);
  if (id == "T1") {
    for (Index p : {10, 20, 30}) both({t, {}, 200, p, Mechanism::FixedCensor, 0.0});
  } else if (id == "T2") {
    for (double q : {0.1, 0.2, 0.3}) both({t, {}, 200, 10, Mechanism::QuantileCensor, q});
  } else if (id == "T3") {
    for (Index n : {200, 500, 1000}) both({t, {}, n, 10, Mechanism::FixedCensor, 0.0});
  } else if (id == "T4") {
    for (Index p : {10, 20, 30}) both({t, {}, 200, p, Mechanism::Mcar, 0.1});
  } else if (id == "T5") {
    for (Index n : {200, 500, 1000}) both({t, {}, n, 10, Mechanism::Mcar, 0.1});
  } else if (id == "T6") {
    for (double q : {0.1, 0.2, 0.3}) both({t, {}, 200, 20, Mechanism::Mcar, q});
  } else {
    throw InvalidInput("unknown table '" + t + "' (expected T1 to T6)");
  }
  return rows;
}

/// Seed of replication r's data. Independent of the incompleteness level, so
/// rows that differ only in q see the same complete data (and nested masks).
inline std::uint64_t replication_data_seed(std::uint64_t seed, const Design& d, int replication) {
  const auto unit = static_cast<std::uint64_t>(static_cast<int>(d.setting)) * 1'000'000'000ULL +
                    static_cast<std::uint64_t>(d.n) * 10'000ULL + static_cast<std::uint64_t>(d.p);
  return RngStream::key(seed, {static_cast<std::uint64_t>(replication), unit, StreamPurpose::Replication});
}

inline ObservedData simulate_design(const Design& d, const TruthSpec& truth, std::uint64_t data_seed) {
  RngStream rng(data_seed, {0, 0, StreamPurpose::Simulate});
  const Eigen::MatrixXd y = sample_data(d.n, truth, rng);
  switch (d.mechanism) {
    case Mechanism::None: return ObservedData::complete(y);
    case Mechanism::FixedCensor: {
      const auto c = alternating_thresholds(d.p);
      return apply_fixed_censoring(y, c, CensorSide::Left);
    }
    case Mechanism::QuantileCensor: return apply_quantile_censoring(y, d.q, CensorSide::Left);
    case Mechanism::Mcar: {
      RngStream mask(data_seed, {0, 0, StreamPurpose::Mask});
      return apply_mcar(ObservedData::complete(y), d.q, mask);
    }
  }
  throw InvalidInput("unknown mechanism");
}

struct ReplicationResult {
  int replication = 0;
  double error_mean = 0.0;
  double error_median = 0.0;
  double tpr = 0.0;
  double fdr = 0.0;
  /// False positives over true-zero pairs.
  double fpr = 0.0;
  double seconds = 0.0;
  int sweeps_verified = 0;
  Index draws = 0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

struct DesignResult {
  Design design;
  std::vector<ReplicationResult> replications;

  template <typename Field>
  MeanSd aggregate(Field field) const {
    std::vector<double> v;
    for (const auto& r : replications) v.push_back(r.*field);
    return mean_sd(v);
  }
};

inline ReplicationResult run_replication(const Design& d, const TruthSpec& truth, int replication, std::uint64_t seed,
                                         SamplerConfig cfg, double ci_level = 0.95) {
  const std::uint64_t data_seed = replication_data_seed(seed, d, replication);
  const ObservedData data = simulate_design(d, truth, data_seed);
  cfg.seed = RngStream::key(data_seed, {1, 0, StreamPurpose::Generic});
  const GibbsFit fit = d.censored() || d.mechanism == Mechanism::None ? run_censored_ghs(data, cfg)
                                                                       : run_missing_ghs(data, cfg);
  const PosteriorSummary s = summarize(fit.draws, ci_level);
  const auto truth_edges = true_edges(truth);
  const auto rec = tpr_fdr(s.edges, truth_edges);

  ReplicationResult r;
  r.replication = replication;
  r.error_mean = frob_sq_error(s.mean, truth.omega);
  r.error_median = frob_sq_error(s.median, truth.omega);
  r.tpr = rec.tpr;
  r.fdr = rec.fdr;
  const double pairs = static_cast<double>(d.p * (d.p - 1) / 2);
  const std::set<Edge> true_set(truth_edges.begin(), truth_edges.end());
  double false_pos = 0.0;
  for (const auto& e : s.edges) false_pos += !true_set.contains(e);
  r.fpr = false_pos / std::max(1.0, pairs - static_cast<double>(truth_edges.size()));
  r.seconds = fit.seconds;
  r.sweeps_verified = fit.sweeps_verified;
  r.draws = fit.draws.size();
  return r;
}

/// Runs `replications` independent replications of one design, in parallel
/// across replications (each fit single-threaded).
inline DesignResult run_design(const Design& d, int replications, std::uint64_t seed, SamplerConfig cfg,
                               int threads = 1, double ci_level = 0.95) {
  if (replications < 1) throw InvalidInput("replications must be at least 1");
  const TruthSpec truth = make_truth(d.setting, d.p);
  cfg.threads = 1;
  DesignResult out{d, std::vector<ReplicationResult>(static_cast<std::size_t>(replications))};
  parallel_for(replications, resolve_threads(threads), [&](Index r) {
    out.replications[static_cast<std::size_t>(r)] =
        run_replication(d, truth, static_cast<int>(r), seed, cfg, ci_level);
  });
  return out;
}

inline std::string format_mean_sd(MeanSd m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f)", m.mean, m.sd);
  return buf;
}

}  // namespace cghs
