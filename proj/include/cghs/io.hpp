#pragma once

#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cghs/data.hpp"
#include "cghs/diagnostics.hpp"
#include "cghs/errors.hpp"

namespace cghs::io {

/// File-system or format problem while reading/writing artifacts.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kNa = "NA";

/// Shortest representation that parses back to the same double. NaN is NA.
inline std::string format_double(double v) {
  if (std::isnan(v)) return std::string(kNa);
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == kNa) return std::numeric_limits<double>::quiet_NaN();
  if (s == "Inf" || s == "+Inf") return std::numeric_limits<double>::infinity();
  if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidInput("cannot parse '" + std::string(s) + "' as a number " + where);
  }
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

/// Plain numeric CSV without header; NA becomes NaN.
inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InvalidInput(path.string() + " is empty");
  const auto cols = static_cast<Index>(split_fields(lines.front()).size());
  Eigen::MatrixXd m(static_cast<Index>(lines.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto fields = split_fields(lines[static_cast<std::size_t>(i)]);
    if (static_cast<Index>(fields.size()) != cols) {
      throw InvalidInput(path.string() + ": line " + std::to_string(i + 1) + " has " +
                         std::to_string(fields.size()) + " fields, expected " + std::to_string(cols));
    }
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = parse_double(fields[static_cast<std::size_t>(j)],
                             "in " + path.string() + " line " + std::to_string(i + 1));
    }
  }
  return m;
}

inline void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline StatusGrid read_status_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InvalidInput(path.string() + " is empty");
  const auto cols = static_cast<Index>(split_fields(lines.front()).size());
  StatusGrid g(static_cast<Index>(lines.size()), cols);
  for (Index i = 0; i < g.rows(); ++i) {
    const auto fields = split_fields(lines[static_cast<std::size_t>(i)]);
    if (static_cast<Index>(fields.size()) != cols) {
      throw InvalidInput(path.string() + ": line " + std::to_string(i + 1) + " has the wrong number of fields");
    }
    for (Index j = 0; j < cols; ++j) {
      auto f = fields[static_cast<std::size_t>(j)];
      while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
      while (!f.empty() && f.back() == ' ') f.remove_suffix(1);
      if (f.size() != 1) {
        throw InvalidInput(path.string() + ": line " + std::to_string(i + 1) + " has status '" + std::string(f) +
                           "' (expected O, L, R or M)");
      }
      g(i, j) = parse_status_code(f.front());
    }
  }
  return g;
}

inline void write_status_csv(const std::filesystem::path& path, const StatusGrid& g) {
  auto out = open_out(path);
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) out << (j ? "," : "") << status_code(g(i, j));
    out << '\n';
  }
}

/// One row of p values, NA for columns without censoring.
inline std::vector<std::optional<double>> read_thresholds_csv(const std::filesystem::path& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.rows() != 1) throw InvalidInput(path.string() + ": thresholds must be a single row");
  std::vector<std::optional<double>> out;
  for (Index j = 0; j < m.cols(); ++j) {
    if (std::isnan(m(0, j))) out.emplace_back(std::nullopt);
    else out.emplace_back(m(0, j));
  }
  return out;
}

inline void write_thresholds_csv(const std::filesystem::path& path, const std::vector<std::optional<double>>& c) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < c.size(); ++j) out << (j ? "," : "") << (c[j] ? format_double(*c[j]) : std::string(kNa));
  out << '\n';
}

/// Reads the data/status/thresholds triple. Without a status file, NA cells
/// are Missing and the rest Observed; without thresholds, no column is censored.
inline ObservedData load_observed_data(const std::filesystem::path& data_path,
                                       const std::optional<std::filesystem::path>& status_path,
                                       const std::optional<std::filesystem::path>& thresholds_path) {
  ObservedData d;
  d.values = read_matrix_csv(data_path);
  const Index n = d.rows(), p = d.cols();
  if (status_path) {
    d.status = read_status_csv(*status_path);
    if (d.status.rows() != n || d.status.cols() != p) {
      throw InvalidInput("status file is " + std::to_string(d.status.rows()) + "x" + std::to_string(d.status.cols()) +
                         " but data is " + std::to_string(n) + "x" + std::to_string(p));
    }
  } else {
    d.status = StatusGrid(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j)
        if (std::isnan(d.values(i, j))) d.status(i, j) = CellStatus::Missing;
  }
  if (thresholds_path) {
    d.thresholds = read_thresholds_csv(*thresholds_path);
    if (static_cast<Index>(d.thresholds.size()) != p) {
      throw InvalidInput("thresholds file has " + std::to_string(d.thresholds.size()) + " entries but data has " +
                         std::to_string(p) + " columns");
    }
  } else {
    d.thresholds.assign(static_cast<std::size_t>(p), std::nullopt);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (d.status(i, j) == CellStatus::Missing) {
        d.values(i, j) = kMissingValue;
      } else if (std::isnan(d.values(i, j))) {
        throw InvalidInput("NA at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                           " but its status is not M");
      }
    }
  }
  d.validate();
  return d;
}

inline void write_observed_data(const std::filesystem::path& dir, const ObservedData& d) {
  write_matrix_csv(dir / "data.csv", d.values);
  write_status_csv(dir / "status.csv", d.status);
  write_thresholds_csv(dir / "thresholds.csv", d.thresholds);
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Index rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols) throw InvalidInput("matrix JSON has the wrong number of entries");
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
  return m;
}

/// Summary as JSON: matrices row-major with dimensions, edges 1-based.
inline nlohmann::json summary_to_json(const PosteriorSummary& s) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : s.edges) edges.push_back({e.i + 1, e.j + 1});
  return {{"p", s.mean.rows()},       {"draws", s.draws},
          {"ci_level", s.level},      {"mean", matrix_to_json(s.mean)},
          {"median", matrix_to_json(s.median)}, {"ci_lower", matrix_to_json(s.ci_lower)},
          {"ci_upper", matrix_to_json(s.ci_upper)}, {"edges", std::move(edges)}};
}

inline PosteriorSummary summary_from_json(const nlohmann::json& j) {
  PosteriorSummary s;
  s.level = j.at("ci_level").get<double>();
  s.draws = j.at("draws").get<Index>();
  s.mean = matrix_from_json(j.at("mean"));
  s.median = matrix_from_json(j.at("median"));
  s.ci_lower = matrix_from_json(j.at("ci_lower"));
  s.ci_upper = matrix_from_json(j.at("ci_upper"));
  for (const auto& e : j.at("edges")) s.edges.push_back({e.at(0).get<Index>() - 1, e.at(1).get<Index>() - 1});
  return s;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

/// Edge list with 1-based indices: j,k,mean,ci_lower,ci_upper.
inline void write_edges_csv(const std::filesystem::path& path, const PosteriorSummary& s) {
  auto out = open_out(path);
  out << "j,k,mean,ci_lower,ci_upper\n";
  for (const auto& e : s.edges) {
    out << e.i + 1 << ',' << e.j + 1 << ',' << format_double(s.mean(e.i, e.j)) << ','
        << format_double(s.ci_lower(e.i, e.j)) << ',' << format_double(s.ci_upper(e.i, e.j)) << '\n';
  }
}

/// Per-entry chains: header "draw,omega_i_j,...", one row per retained draw.
struct ChainTable {
  std::vector<Edge> entries;  // 0-based, i <= j
  Eigen::MatrixXd values;     // draws x entries
};

inline std::string chain_column_name(const Edge& e) {
  return "omega_" + std::to_string(e.i + 1) + "_" + std::to_string(e.j + 1);
}

inline void write_chains_csv(const std::filesystem::path& path, const ChainTable& t) {
  auto out = open_out(path);
  out << "draw";
  for (const auto& e : t.entries) out << ',' << chain_column_name(e);
  out << '\n';
  for (Index r = 0; r < t.values.rows(); ++r) {
    out << r + 1;
    for (Index c = 0; c < t.values.cols(); ++c) out << ',' << format_double(t.values(r, c));
    out << '\n';
  }
}

inline ChainTable read_chains_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InvalidInput(path.string() + " is empty");
  const auto header = split_fields(lines.front());
  if (header.empty() || header.front() != "draw") throw InvalidInput(path.string() + ": missing 'draw' header");
  ChainTable t;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string name(header[c]);
    int i = 0, j = 0;
    if (std::sscanf(name.c_str(), "omega_%d_%d", &i, &j) != 2 || i < 1 || j < 1) {
      throw InvalidInput(path.string() + ": bad chain column '" + name + "'");
    }
    t.entries.push_back({i - 1, j - 1});
  }
  const auto cols = static_cast<Index>(t.entries.size());
  t.values.resize(static_cast<Index>(lines.size()) - 1, cols);
  for (Index r = 0; r < t.values.rows(); ++r) {
    const auto fields = split_fields(lines[static_cast<std::size_t>(r + 1)]);
    if (static_cast<Index>(fields.size()) != cols + 1) throw InvalidInput(path.string() + ": ragged row");
    for (Index c = 0; c < cols; ++c) {
      t.values(r, c) = parse_double(fields[static_cast<std::size_t>(c + 1)], "in " + path.string());
    }
  }
  return t;
}

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cghs::io
