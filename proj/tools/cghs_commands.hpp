#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cghs/benchmark.hpp"
#include "cghs/censored_sampler.hpp"
#include "cghs/diagnostics.hpp"
#include "cghs/errors.hpp"
#include "cghs/io.hpp"
#include "cghs/missing_sampler.hpp"
#include "cghs/simulation.hpp"

namespace cghs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3 };

/// Provenance written next to every command's outputs.
struct RunManifest {
  std::vector<std::string> command;
  std::string subcommand;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  double wall_seconds = 0.0;

  json to_json() const {
    json in = json::array();
    for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"fnv1a64", io::file_digest(p)}});
    json out = json::array();
    for (const auto& p : outputs) out.push_back(p.string());
    return {{"tool", "cghs"},   {"version", kVersion}, {"command", command}, {"subcommand", subcommand},
            {"seed", seed},     {"config", config},    {"inputs", in},       {"outputs", out},
            {"wall_seconds", wall_seconds}};
  }

  void write(const fs::path& dir) const { io::write_json(dir / "manifest.json", to_json()); }
};

/// Comma-separated reals; used for threshold patterns.
inline std::vector<double> parse_real_list(const std::string& s) {
  std::vector<double> out;
  for (auto f : io::split_fields(s)) out.push_back(io::parse_double(f, "in list '" + s + "'"));
  if (out.empty()) throw InvalidInput("empty list");
  return out;
}

/// "i:j,k:l" (1-based) to 0-based entries with i <= j.
inline std::vector<Edge> parse_entries(const std::string& s, Index p) {
  std::vector<Edge> out;
  for (auto f : io::split_fields(s)) {
    const std::string field(f);
    int i = 0, j = 0;
    char extra = 0;
    if (std::sscanf(field.c_str(), "%d:%d%c", &i, &j, &extra) != 2) {
      throw InvalidInput("bad entry '" + field + "' (expected i:j)");
    }
    if (i < 1 || j < 1 || (p > 0 && (i > p || j > p))) {
      throw InvalidInput("entry '" + field + "' is out of range for p = " + std::to_string(p));
    }
    Edge e{std::min(i, j) - 1, std::max(i, j) - 1};
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

inline std::vector<Edge> all_entries(Index p) {
  std::vector<Edge> out;
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) out.push_back({i, j});
  return out;
}

inline json config_json(const SamplerConfig& c) {
  return {{"n_iter", c.n_iter}, {"burn_in", c.burn_in}, {"thin", c.thin},         {"a0", c.a0},
          {"b0", c.b0},         {"seed", c.seed},       {"pd_floor", c.pd_floor}};
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  int setting = 1;
  Index p = 10;
  Index n = 200;
  std::string mechanism = "fixed-censor";
  double q = 0.1;
  std::string thresholds = "-0.5,0.5";
  std::string side = "left";
  std::uint64_t seed = 1;
  fs::path out;
};

inline CensorSide parse_side(const std::string& s) {
  if (s == "left") return CensorSide::Left;
  if (s == "right") return CensorSide::Right;
  throw InvalidInput("side must be 'left' or 'right'");
}

inline Setting parse_setting(int s) {
  if (s == 1) return Setting::Tridiagonal;
  if (s == 2) return Setting::EquicorrelatedBlock;
  throw InvalidInput("setting must be 1 or 2");
}

/// Writes data.csv, status.csv, thresholds.csv, omega_true.csv,
/// sigma_true.csv and manifest.json into opts.out.
inline RunManifest cmd_simulate(const SimulateOptions& opts) {
  const auto mech = parse_mechanism(opts.mechanism);
  const TruthSpec truth = make_truth(parse_setting(opts.setting), opts.p);
  if (opts.n < 2) throw InvalidInput("n must be at least 2");
  RngStream rng(opts.seed, {0, 0, StreamPurpose::Simulate});
  const Eigen::MatrixXd y = sample_data(opts.n, truth, rng);

  ObservedData data;
  switch (mech) {
    case Mechanism::None: data = ObservedData::complete(y); break;
    case Mechanism::FixedCensor: {
      const auto pattern = parse_real_list(opts.thresholds);
      std::vector<double> c(static_cast<std::size_t>(opts.p));
      for (std::size_t j = 0; j < c.size(); ++j) c[j] = pattern[j % pattern.size()];
      data = apply_fixed_censoring(y, c, parse_side(opts.side));
      break;
    }
    case Mechanism::QuantileCensor: data = apply_quantile_censoring(y, opts.q, parse_side(opts.side)); break;
    case Mechanism::Mcar: {
      RngStream mask(opts.seed, {0, 0, StreamPurpose::Mask});
      data = apply_mcar(ObservedData::complete(y), opts.q, mask);
      break;
    }
  }

  io::write_observed_data(opts.out, data);
  io::write_matrix_csv(opts.out / "omega_true.csv", truth.omega);
  io::write_matrix_csv(opts.out / "sigma_true.csv", truth.sigma);

  RunManifest m;
  m.subcommand = "simulate";
  m.seed = opts.seed;
  m.config = {{"setting", opts.setting}, {"p", opts.p},       {"n", opts.n},
              {"mechanism", opts.mechanism}, {"q", opts.q}, {"thresholds", opts.thresholds},
              {"side", opts.side}};
  for (const char* f : {"data.csv", "status.csv", "thresholds.csv", "omega_true.csv", "sigma_true.csv"}) {
    m.outputs.push_back(opts.out / f);
  }
  return m;
}

// --------------------------------------------------------------------- fit

struct FitOptions {
  fs::path data;
  std::optional<fs::path> status;
  std::optional<fs::path> thresholds;
  std::string mode = "auto";
  SamplerConfig sampler;
  double ci_level = 0.95;
  /// "", "all", or a list of 1-based i:j entries.
  std::string track;
  fs::path out;
};

struct FitOutcome {
  RunManifest manifest;
  PosteriorSummary summary;
  std::string sampler;
};

/// Which sampler a mode string selects for the given data.
inline std::string resolve_mode(const std::string& mode, const ObservedData& data) {
  if (mode == "censored" || mode == "missing") return mode;
  if (mode != "auto") throw InvalidInput("mode must be censored, missing or auto");
  if (data.has_censoring()) return "censored";
  if (data.has(CellStatus::Missing)) return "missing";
  return "censored";
}

/// Writes summary.json, edges.csv, chains.csv (tracked entries only) and manifest.json.
inline FitOutcome cmd_fit(const FitOptions& opts) {
  const ObservedData data = io::load_observed_data(opts.data, opts.status, opts.thresholds);
  const std::string sampler = resolve_mode(opts.mode, data);
  std::vector<Edge> tracked;
  if (opts.track == "all") tracked = all_entries(data.cols());
  else if (!opts.track.empty() && opts.track != "none") tracked = parse_entries(opts.track, data.cols());

  const GibbsFit fit = sampler == "censored" ? run_censored_ghs(data, opts.sampler) : run_missing_ghs(data, opts.sampler);
  FitOutcome outcome{{}, summarize(fit.draws, opts.ci_level), sampler};

  io::write_json(opts.out / "summary.json", io::summary_to_json(outcome.summary));
  io::write_edges_csv(opts.out / "edges.csv", outcome.summary);
  auto& m = outcome.manifest;
  m.outputs = {opts.out / "summary.json", opts.out / "edges.csv"};
  if (!tracked.empty()) {
    io::ChainTable table{tracked, Eigen::MatrixXd(fit.draws.size(), static_cast<Index>(tracked.size()))};
    for (std::size_t c = 0; c < tracked.size(); ++c) {
      table.values.col(static_cast<Index>(c)) = fit.draws.chain(tracked[c].i, tracked[c].j);
    }
    io::write_chains_csv(opts.out / "chains.csv", table);
    m.outputs.push_back(opts.out / "chains.csv");
  }

  m.subcommand = "fit";
  m.seed = opts.sampler.seed;
  m.config = config_json(opts.sampler);
  m.config["mode"] = opts.mode;
  m.config["sampler"] = sampler;
  m.config["ci_level"] = opts.ci_level;
  m.config["track"] = opts.track;
  m.inputs.push_back(opts.data);
  if (opts.status) m.inputs.push_back(*opts.status);
  if (opts.thresholds) m.inputs.push_back(*opts.thresholds);
  return outcome;
}

// --------------------------------------------------------------- benchmark

struct BenchmarkOptions {
  std::string table = "T2";
  int replications = 20;
  std::uint64_t seed = 1;
  /// 0 runs both settings.
  int setting = 0;
  SamplerConfig sampler;
  double ci_level = 0.95;
  fs::path out;
};

/// Runs every row of a table and writes replications.csv, summary.csv,
/// table.txt and manifest.json.
inline std::pair<RunManifest, std::vector<DesignResult>> cmd_benchmark(const BenchmarkOptions& opts) {
  auto designs = table_designs(opts.table);
  if (opts.setting != 0) {
    const Setting keep = parse_setting(opts.setting);
    std::erase_if(designs, [&](const Design& d) { return d.setting != keep; });
  }
  opts.sampler.validate();
  std::vector<DesignResult> results;
  for (const auto& d : designs) {
    results.push_back(run_design(d, opts.replications, opts.seed, opts.sampler, opts.sampler.threads, opts.ci_level));
  }

  {
    auto out = io::open_out(opts.out / "replications.csv");
    out << "table,row,setting,n,p,mechanism,q,replication,error_mean,error_median,tpr,fdr,fpr\n";
    for (std::size_t r = 0; r < results.size(); ++r) {
      const auto& d = results[r].design;
      for (const auto& rep : results[r].replications) {
        out << d.table << ',' << r + 1 << ',' << static_cast<int>(d.setting) << ',' << d.n << ',' << d.p << ','
            << mechanism_name(d.mechanism) << ',' << io::format_double(d.q) << ',' << rep.replication + 1 << ','
            << io::format_double(rep.error_mean) << ',' << io::format_double(rep.error_median) << ','
            << io::format_double(rep.tpr) << ',' << io::format_double(rep.fdr) << ',' << io::format_double(rep.fpr)
            << '\n';
      }
    }
  }
  {
    auto out = io::open_out(opts.out / "summary.csv");
    out << "table,row,label,replications,error_mean,error_sd,error_median_mean,error_median_sd,tpr_mean,tpr_sd,"
           "fdr_mean,fdr_sd,fpr_mean,fpr_sd\n";
    auto txt = io::open_out(opts.out / "table.txt");
    txt << opts.table << "  (" << opts.replications << " replications; mean (SD))\n";
    txt << "row | design | ||Omega_hat - Omega||_F^2 | TPR | FDR\n";
    for (std::size_t r = 0; r < results.size(); ++r) {
      const auto& res = results[r];
      const auto err = res.aggregate(&ReplicationResult::error_mean);
      const auto med = res.aggregate(&ReplicationResult::error_median);
      const auto tpr = res.aggregate(&ReplicationResult::tpr);
      const auto fdr = res.aggregate(&ReplicationResult::fdr);
      const auto fpr = res.aggregate(&ReplicationResult::fpr);
      out << res.design.table << ',' << r + 1 << ",\"" << res.design.label() << "\"," << res.replications.size();
      for (const auto& a : {err, med, tpr, fdr, fpr}) {
        out << ',' << io::format_double(a.mean) << ',' << io::format_double(a.sd);
      }
      out << '\n';
      txt << r + 1 << " | " << res.design.label() << " | " << format_mean_sd(err) << " | " << format_mean_sd(tpr)
          << " | " << format_mean_sd(fdr) << '\n';
    }
  }

  RunManifest m;
  m.subcommand = "benchmark";
  m.seed = opts.seed;
  m.config = config_json(opts.sampler);
  m.config["table"] = opts.table;
  m.config["replications"] = opts.replications;
  m.config["setting_filter"] = opts.setting;
  m.config["ci_level"] = opts.ci_level;
  for (const char* f : {"replications.csv", "summary.csv", "table.txt"}) m.outputs.push_back(opts.out / f);
  return {std::move(m), std::move(results)};
}

// ------------------------------------------------------------- diagnostics

struct DiagnosticsOptions {
  fs::path fit_dir;
  /// Empty: every tracked entry.
  std::string entries;
  Index max_lag = 50;
  fs::path out;
};

struct EntryDiagnostics {
  Edge entry;
  Eigen::VectorXd acf;
  double ess;
  Index draws;
};

/// Reads chains.csv from a fit directory and writes trace_i_j.csv,
/// acf_i_j.csv per entry plus ess.csv and manifest.json.
inline std::pair<RunManifest, std::vector<EntryDiagnostics>> cmd_diagnostics(const DiagnosticsOptions& opts) {
  const fs::path chains_path = opts.fit_dir / "chains.csv";
  if (!fs::exists(chains_path)) {
    throw InvalidInput("no chains.csv in " + opts.fit_dir.string() + "; rerun fit with --track");
  }
  const io::ChainTable table = io::read_chains_csv(chains_path);
  const std::vector<Edge> wanted = opts.entries.empty() ? table.entries : parse_entries(opts.entries, 0);

  std::vector<EntryDiagnostics> results;
  RunManifest m;
  for (const auto& e : wanted) {
    const auto it = std::find(table.entries.begin(), table.entries.end(), e);
    if (it == table.entries.end()) {
      std::string listing;
      for (const auto& t : table.entries) listing += (listing.empty() ? "" : ", ") + std::to_string(t.i + 1) + ":" + std::to_string(t.j + 1);
      throw InvalidInput("entry " + std::to_string(e.i + 1) + ":" + std::to_string(e.j + 1) +
                         " is not tracked; tracked entries: " + listing);
    }
    const Eigen::VectorXd chain = table.values.col(it - table.entries.begin());
    if (opts.max_lag >= chain.size()) {
      throw InvalidInput("max-lag " + std::to_string(opts.max_lag) + " must be below the chain length " +
                         std::to_string(chain.size()));
    }
    EntryDiagnostics d{e, acf(chain, opts.max_lag), ess(chain), chain.size()};
    const std::string tag = std::to_string(e.i + 1) + "_" + std::to_string(e.j + 1);
    {
      auto out = io::open_out(opts.out / ("trace_" + tag + ".csv"));
      out << "iteration,value\n";
      for (Index t = 0; t < chain.size(); ++t) out << t + 1 << ',' << io::format_double(chain[t]) << '\n';
    }
    {
      auto out = io::open_out(opts.out / ("acf_" + tag + ".csv"));
      out << "lag,acf\n";
      for (Index l = 0; l < d.acf.size(); ++l) out << l << ',' << io::format_double(d.acf[l]) << '\n';
    }
    m.outputs.push_back(opts.out / ("trace_" + tag + ".csv"));
    m.outputs.push_back(opts.out / ("acf_" + tag + ".csv"));
    results.push_back(std::move(d));
  }
  {
    auto out = io::open_out(opts.out / "ess.csv");
    out << "i,j,draws,ess\n";
    for (const auto& d : results) {
      out << d.entry.i + 1 << ',' << d.entry.j + 1 << ',' << d.draws << ',' << io::format_double(d.ess) << '\n';
    }
  }
  m.outputs.push_back(opts.out / "ess.csv");
  m.subcommand = "diagnostics";
  m.config = {{"entries", opts.entries}, {"max_lag", opts.max_lag}};
  m.inputs.push_back(chains_path);
  return {std::move(m), std::move(results)};
}

// ------------------------------------------------------------------- entry

int run(std::vector<std::string> args);

namespace detail {

inline void add_sampler_flags(CLI::App* sub, SamplerConfig& cfg) {
  sub->add_option("--iters", cfg.n_iter, "Total Gibbs sweeps")->capture_default_str();
  sub->add_option("--burnin", cfg.burn_in, "Sweeps discarded as burn-in")->capture_default_str();
  sub->add_option("--thin", cfg.thin, "Keep every k-th sweep after burn-in")->capture_default_str();
  sub->add_option("--a0", cfg.a0, "Inverse-gamma shape prior on residual variances")->capture_default_str();
  sub->add_option("--b0", cfg.b0, "Inverse-gamma rate prior on residual variances")->capture_default_str();
  sub->add_option("--pd-floor", cfg.pd_floor, "Eigenvalue floor for PD projection")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "Worker threads (0: $CGHS_THREADS or 1)")->capture_default_str();
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return kOk;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const io::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace detail

/// Parses args (args[0] is the program name) and runs one subcommand.
/// Returns the process exit code.
inline int run(std::vector<std::string> args) {
  CLI::App app{"Censored graphical horseshoe: sparse precision estimation from censored or missing data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulation dataset");
  simulate->add_option("--setting", sim.setting, "Truth: 1 = tridiagonal, 2 = equicorrelated block")->capture_default_str();
  simulate->add_option("--p", sim.p, "Dimension")->capture_default_str();
  simulate->add_option("--n", sim.n, "Sample size")->capture_default_str();
  simulate->add_option("--mechanism", sim.mechanism, "none | fixed-censor | quantile-censor | mcar")->capture_default_str();
  simulate->add_option("--q", sim.q, "Censored/missing proportion")->capture_default_str();
  simulate->add_option("--thresholds", sim.thresholds, "Fixed thresholds, recycled to length p")->capture_default_str();
  simulate->add_option("--side", sim.side, "Censoring side: left | right")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();

  FitOptions fit;
  std::string status_path, thresholds_path;
  auto* fitcmd = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset");
  fitcmd->add_option("--data", fit.data, "Data CSV (NA for missing)")->required();
  fitcmd->add_option("--status", status_path, "Status CSV (O/L/R/M)");
  fitcmd->add_option("--thresholds", thresholds_path, "Thresholds CSV (one row, NA for uncensored columns)");
  fitcmd->add_option("--mode", fit.mode, "censored | missing | auto")->capture_default_str();
  fitcmd->add_option("--seed", fit.sampler.seed, "Random seed")->capture_default_str();
  fitcmd->add_option("--ci-level", fit.ci_level, "Credible level for edge selection")->capture_default_str();
  fitcmd->add_option("--track", fit.track, "Entries whose chains are stored: all | i:j,k:l");
  fitcmd->add_option("--out", fit.out, "Output directory")->required();
  detail::add_sampler_flags(fitcmd, fit.sampler);

  BenchmarkOptions bench;
  auto* benchcmd = app.add_subcommand("benchmark", "Replicate a simulation table");
  benchcmd->add_option("--table", bench.table, "T1 ... T6")->capture_default_str();
  benchcmd->add_option("--replications", bench.replications, "Replications per row")->capture_default_str();
  benchcmd->add_option("--setting", bench.setting, "Only this setting (1 or 2); 0 = both")->capture_default_str();
  benchcmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  benchcmd->add_option("--ci-level", bench.ci_level, "Credible level for edge selection")->capture_default_str();
  benchcmd->add_option("--out", bench.out, "Output directory")->required();
  detail::add_sampler_flags(benchcmd, bench.sampler);

  DiagnosticsOptions diag;
  auto* diagcmd = app.add_subcommand("diagnostics", "Trace, ACF and ESS for tracked entries of a fit");
  diagcmd->add_option("--fit", diag.fit_dir, "Output directory of a fit run")->required();
  diagcmd->add_option("--entries", diag.entries, "Entries i:j,k:l (default: all tracked)");
  diagcmd->add_option("--max-lag", diag.max_lag, "Largest ACF lag")->capture_default_str();
  diagcmd->add_option("--out", diag.out, "Output directory")->required();

  fs::path manifest_path;
  auto* rerun = app.add_subcommand("rerun", "Re-execute the command recorded in a manifest");
  rerun->add_option("manifest", manifest_path, "manifest.json")->required();

  try {
    std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  const auto start = std::chrono::steady_clock::now();
  auto finish = [&](RunManifest m, const fs::path& dir) {
    m.command = args;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.write(dir);
  };

  if (*simulate) {
    return detail::guarded([&] {
      finish(cmd_simulate(sim), sim.out);
      std::cout << "wrote simulation to " << sim.out.string() << '\n';
    });
  }
  if (*fitcmd) {
    if (!status_path.empty()) fit.status = status_path;
    if (!thresholds_path.empty()) fit.thresholds = thresholds_path;
    return detail::guarded([&] {
      auto outcome = cmd_fit(fit);
      finish(std::move(outcome.manifest), fit.out);
      std::cout << outcome.sampler << " sampler: " << outcome.summary.draws << " draws, "
                << outcome.summary.edges.size() << " edges selected; wrote " << fit.out.string() << '\n';
    });
  }
  if (*benchcmd) {
    return detail::guarded([&] {
      auto [manifest, results] = cmd_benchmark(bench);
      finish(std::move(manifest), bench.out);
      std::ifstream table(bench.out / "table.txt");
      std::cout << table.rdbuf();
    });
  }
  if (*diagcmd) {
    return detail::guarded([&] {
      auto [manifest, results] = cmd_diagnostics(diag);
      finish(std::move(manifest), diag.out);
      for (const auto& d : results) {
        std::cout << "omega[" << d.entry.i + 1 << "," << d.entry.j + 1 << "]: ESS " << io::format_double(d.ess)
                  << " of " << d.draws << '\n';
      }
    });
  }
  if (*rerun) {
    std::vector<std::string> recorded;
    const int code = detail::guarded([&] {
      const json m = io::read_json(manifest_path);
      recorded = m.at("command").get<std::vector<std::string>>();
      if (recorded.size() < 2 || recorded[1] == "rerun") throw InvalidInput("manifest does not record a rerunnable command");
    });
    if (code != kOk) return code;
    return run(recorded);
  }
  return kValidation;
}

}  // namespace cghs::cli
