#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cghs/errors.hpp"

namespace cghs {

using Eigen::Index;

enum class CellStatus : std::uint8_t { Observed, CensoredLeft, CensoredRight, Missing };

inline char status_code(CellStatus s) {
  switch (s) {
    case CellStatus::Observed: return 'O';
    case CellStatus::CensoredLeft: return 'L';
    case CellStatus::CensoredRight: return 'R';
    case CellStatus::Missing: return 'M';
  }
  return '?';
}

inline CellStatus parse_status_code(char c) {
  switch (c) {
    case 'O': return CellStatus::Observed;
    case 'L': return CellStatus::CensoredLeft;
    case 'R': return CellStatus::CensoredRight;
    case 'M': return CellStatus::Missing;
    default: throw InvalidInput(std::string("unknown status code '") + c + "' (expected O, L, R or M)");
  }
}

/// Dense n x p grid of cell statuses.
class StatusGrid {
 public:
  StatusGrid() = default;
  StatusGrid(Index rows, Index cols, CellStatus fill = CellStatus::Observed)
      : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows * cols), fill) {}

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  CellStatus operator()(Index i, Index j) const { return cells_[offset(i, j)]; }
  CellStatus& operator()(Index i, Index j) { return cells_[offset(i, j)]; }

  Index count(CellStatus s) const {
    Index c = 0;
    for (auto v : cells_) c += (v == s);
    return c;
  }

  friend bool operator==(const StatusGrid&, const StatusGrid&) = default;

 private:
  std::size_t offset(Index i, Index j) const { return static_cast<std::size_t>(i * cols_ + j); }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<CellStatus> cells_;
};

inline constexpr double kMissingValue = std::numeric_limits<double>::quiet_NaN();

/// Censored and/or incomplete n x p observations. Censored cells hold their
/// column threshold, missing cells hold NaN; status is authoritative.
struct ObservedData {
  Eigen::MatrixXd values;
  StatusGrid status;
  std::vector<std::optional<double>> thresholds;

  Index rows() const noexcept { return values.rows(); }
  Index cols() const noexcept { return values.cols(); }

  bool has(CellStatus s) const { return status.count(s) > 0; }
  bool has_censoring() const { return has(CellStatus::CensoredLeft) || has(CellStatus::CensoredRight); }

  /// Every cell observed, no thresholds.
  static ObservedData complete(Eigen::MatrixXd y) {
    ObservedData d;
    d.status = StatusGrid(y.rows(), y.cols());
    d.thresholds.assign(static_cast<std::size_t>(y.cols()), std::nullopt);
    d.values = std::move(y);
    return d;
  }

  void validate() const {
    const Index n = rows(), p = cols();
    if (n < 2 || p < 2) {
      throw InvalidInput("data must have at least 2 rows and 2 columns (got " + std::to_string(n) +
                         "x" + std::to_string(p) + ")");
    }
    if (status.rows() != n || status.cols() != p) throw InvalidInput("status grid dimension mismatch");
    if (static_cast<Index>(thresholds.size()) != p) {
      throw InvalidInput("thresholds must have one entry per column");
    }
    for (Index j = 0; j < p; ++j) {
      bool left = false, right = false;
      for (Index i = 0; i < n; ++i) {
        const auto where = " at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1);
        switch (status(i, j)) {
          case CellStatus::Observed:
            if (!std::isfinite(values(i, j))) throw InvalidInput("non-finite observed value" + where);
            break;
          case CellStatus::Missing:
            break;
          case CellStatus::CensoredLeft:
          case CellStatus::CensoredRight: {
            (status(i, j) == CellStatus::CensoredLeft ? left : right) = true;
            const auto& c = thresholds[static_cast<std::size_t>(j)];
            if (!c || !std::isfinite(*c)) throw InvalidInput("censored cell without a finite threshold" + where);
            if (values(i, j) != *c) throw InvalidInput("censored value differs from the column threshold" + where);
            break;
          }
        }
      }
      if (left && right) {
        throw InvalidInput("column " + std::to_string(j + 1) + " mixes left and right censoring");
      }
    }
  }
};

/// The fully imputed Gaussian matrix Z.
using LatentMatrix = Eigen::MatrixXd;

/// One symmetric p x p precision matrix.
using PrecisionDraw = Eigen::MatrixXd;

struct SamplerConfig {
  int n_iter = 5000;
  int burn_in = 1000;
  int thin = 1;
  double a0 = 1e-2;
  double b0 = 1e-2;
  std::uint64_t seed = 1;
  double pd_floor = 1e-8;
  /// 0 resolves through CGHS_THREADS, then falls back to 1.
  int threads = 0;

  void validate() const {
    if (n_iter < 1) throw InvalidInput("n_iter must be positive");
    if (burn_in < 0 || burn_in >= n_iter) throw InvalidInput("burn_in must lie in [0, n_iter)");
    if (thin < 1) throw InvalidInput("thin must be positive");
    if (!(a0 > 0.0) || !(b0 > 0.0) || !std::isfinite(a0) || !std::isfinite(b0)) {
      throw InvalidInput("a0 and b0 must be positive and finite");
    }
    if (!(pd_floor > 0.0) || !std::isfinite(pd_floor)) throw InvalidInput("pd_floor must be positive");
    if (threads < 0) throw InvalidInput("threads must be non-negative");
  }

  int retained_count() const { return (n_iter - burn_in) / thin; }

  /// Sweeps are numbered from 1; a sweep is kept once past burn-in on the thinning grid.
  bool keeps(int sweep) const { return sweep > burn_in && (sweep - burn_in) % thin == 0; }
};

/// Throws InvariantViolation if Z disagrees with the observed data: observed
/// cells must be bit-identical and censored cells must respect their bound.
inline void verify_latent(const ObservedData& data, const LatentMatrix& z) {
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index i = 0; i < data.rows(); ++i) {
      const double v = z(i, j);
      bool ok = std::isfinite(v);
      switch (data.status(i, j)) {
        case CellStatus::Observed: ok = ok && v == data.values(i, j); break;
        case CellStatus::CensoredLeft: ok = ok && v <= *data.thresholds[static_cast<std::size_t>(j)]; break;
        case CellStatus::CensoredRight: ok = ok && v >= *data.thresholds[static_cast<std::size_t>(j)]; break;
        case CellStatus::Missing: break;
      }
      if (!ok) {
        throw InvariantViolation("latent cell (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                 ") violates its observation constraint");
      }
    }
  }
}

}  // namespace cghs
