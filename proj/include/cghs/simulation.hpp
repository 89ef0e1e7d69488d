#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cghs/data.hpp"
#include "cghs/errors.hpp"
#include "cghs/nodewise.hpp"
#include "cghs/rng.hpp"

namespace cghs {

enum class Setting { Tridiagonal = 1, EquicorrelatedBlock = 2 };

enum class CensorSide { Left, Right };

/// True precision and covariance of a simulation design.
struct TruthSpec {
  Setting setting;
  Index p;
  Eigen::MatrixXd omega;
  Eigen::MatrixXd sigma;

  /// Unordered pairs (i < j) with a nonzero off-diagonal precision entry.
  std::vector<std::pair<Index, Index>> edges() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < j; ++i)
        if (omega(i, j) != 0.0) out.emplace_back(i, j);
    return out;
  }
};

namespace detail {

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("truth matrix is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  symmetrize_in_place(inv);
  return inv;
}

inline TruthSpec checked_truth(TruthSpec t) {
  Eigen::LLT<Eigen::MatrixXd> llt(t.omega);
  if (llt.info() != Eigen::Success || !t.omega.isApprox(t.omega.transpose(), 0.0)) {
    throw NumericalError("truth precision is not symmetric positive definite");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(t.p, t.p);
  if ((t.omega * t.sigma - eye).norm() > 1e-10 * eye.norm()) {
    throw NumericalError("truth precision and covariance are not inverses");
  }
  return t;
}

}  // namespace detail

/// Chain graph: unit diagonal and 0.3 on the first off-diagonals of Omega.
inline TruthSpec gen_setting1(Index p) {
  if (p < 2) throw InvalidParameter("setting 1 needs p >= 2");
  Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(p, p);
  for (Index i = 0; i + 1 < p; ++i) omega(i, i + 1) = omega(i + 1, i) = 0.3;
  Eigen::MatrixXd sigma = detail::spd_inverse(omega);
  return detail::checked_truth({Setting::Tridiagonal, p, std::move(omega), std::move(sigma)});
}

/// Identity covariance with 0.5 correlations among the first three
/// variables; Omega is its (block-diagonal) inverse.
inline TruthSpec gen_setting2(Index p) {
  if (p < 3) throw InvalidParameter("setting 2 needs p >= 3");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  Eigen::Matrix3d block = Eigen::Matrix3d::Constant(0.5);
  block.diagonal().setOnes();
  sigma.topLeftCorner<3, 3>() = block;
  Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(p, p);
  omega.topLeftCorner<3, 3>() = detail::spd_inverse(block);
  return detail::checked_truth({Setting::EquicorrelatedBlock, p, std::move(omega), std::move(sigma)});
}

inline TruthSpec make_truth(Setting setting, Index p) {
  return setting == Setting::Tridiagonal ? gen_setting1(p) : gen_setting2(p);
}

/// n i.i.d. rows from N(0, truth.sigma).
inline Eigen::MatrixXd sample_data(Index n, const TruthSpec& truth, RngStream& rng) {
  if (n < 1) throw InvalidParameter("sample_data: n must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(truth.sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("sample_data: covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd u(n, truth.p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < truth.p; ++j) u(i, j) = rng.normal();
  return u * l.transpose();
}

/// Censors column j at thresholds[j] on sides[j]: left keeps y <= c as c,
/// right keeps y >= c as c. Non-finite thresholds leave the column intact.
inline ObservedData apply_fixed_censoring(const Eigen::MatrixXd& y, std::span<const double> thresholds,
                                          std::span<const CensorSide> sides) {
  const Index p = y.cols();
  if (static_cast<Index>(thresholds.size()) != p || static_cast<Index>(sides.size()) != p) {
    throw InvalidParameter("apply_fixed_censoring: need one threshold and one side per column");
  }
  ObservedData d = ObservedData::complete(y);
  for (Index j = 0; j < p; ++j) {
    const double c = thresholds[static_cast<std::size_t>(j)];
    if (std::isnan(c)) throw InvalidParameter("apply_fixed_censoring: NaN threshold");
    if (!std::isfinite(c)) continue;
    d.thresholds[static_cast<std::size_t>(j)] = c;
    const bool left = sides[static_cast<std::size_t>(j)] == CensorSide::Left;
    for (Index i = 0; i < y.rows(); ++i) {
      if (left ? y(i, j) <= c : y(i, j) >= c) {
        d.values(i, j) = c;
        d.status(i, j) = left ? CellStatus::CensoredLeft : CellStatus::CensoredRight;
      }
    }
  }
  return d;
}

inline ObservedData apply_fixed_censoring(const Eigen::MatrixXd& y, std::span<const double> thresholds,
                                          CensorSide side) {
  const std::vector<CensorSide> sides(static_cast<std::size_t>(y.cols()), side);
  return apply_fixed_censoring(y, thresholds, sides);
}

/// The alternating threshold vector (-0.5, 0.5, -0.5, ...) of length p.
inline std::vector<double> alternating_thresholds(Index p, double magnitude = 0.5) {
  std::vector<double> c(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) c[static_cast<std::size_t>(j)] = (j % 2 == 0) ? -magnitude : magnitude;
  return c;
}

/// Per-column threshold at the nearest-rank empirical quantile: the
/// ceil(q n)-th smallest value for left censoring, the ceil(q n)-th largest
/// for right censoring. q = 0 censors nothing.
inline std::vector<double> quantile_thresholds(const Eigen::MatrixXd& y, double q, CensorSide side) {
  if (!(q >= 0.0 && q < 1.0)) throw InvalidParameter("quantile censoring proportion must lie in [0, 1)");
  const Index n = y.rows();
  const auto rank = static_cast<Index>(std::ceil(q * static_cast<double>(n) - 1e-9));
  const double none = side == CensorSide::Left ? -std::numeric_limits<double>::infinity()
                                               : std::numeric_limits<double>::infinity();
  std::vector<double> c(static_cast<std::size_t>(y.cols()), none);
  if (rank == 0) return c;
  for (Index j = 0; j < y.cols(); ++j) {
    std::vector<double> col(y.col(j).data(), y.col(j).data() + n);
    std::sort(col.begin(), col.end());
    c[static_cast<std::size_t>(j)] =
        side == CensorSide::Left ? col[static_cast<std::size_t>(rank - 1)] : col[static_cast<std::size_t>(n - rank)];
  }
  return c;
}

inline ObservedData apply_quantile_censoring(const Eigen::MatrixXd& y, double q, CensorSide side) {
  const auto c = quantile_thresholds(y, q, side);
  return apply_fixed_censoring(y, c, side);
}

/// Marks exactly round(q * n * p) currently non-missing cells as Missing,
/// chosen uniformly without replacement. Masks that leave a column with no
/// non-missing cell are redrawn.
inline ObservedData apply_mcar(ObservedData data, double q, RngStream& rng, int max_attempts = 100) {
  if (!(q >= 0.0 && q < 1.0)) throw InvalidParameter("missing proportion must lie in [0, 1)");
  const Index n = data.rows(), p = data.cols();
  const auto target = static_cast<Index>(std::llround(q * static_cast<double>(n * p)));
  if (target == 0) return data;

  std::vector<Index> candidates;
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i)
      if (data.status(i, j) != CellStatus::Missing) candidates.push_back(j * n + i);
  if (static_cast<Index>(candidates.size()) < target) throw UnsupportedData("not enough cells to remove");

  std::vector<Index> remaining(static_cast<std::size_t>(p), 0);
  for (Index idx : candidates) ++remaining[static_cast<std::size_t>(idx / n)];

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    // Partial Fisher-Yates: the first `target` slots are the sample.
    for (Index k = 0; k < target; ++k) {
      std::uniform_int_distribution<Index> pick(k, static_cast<Index>(candidates.size()) - 1);
      std::swap(candidates[static_cast<std::size_t>(k)], candidates[static_cast<std::size_t>(pick(rng.engine()))]);
    }
    std::vector<Index> left = remaining;
    for (Index k = 0; k < target; ++k) --left[static_cast<std::size_t>(candidates[static_cast<std::size_t>(k)] / n)];
    if (std::any_of(left.begin(), left.end(), [](Index c) { return c == 0; })) continue;

    for (Index k = 0; k < target; ++k) {
      const Index idx = candidates[static_cast<std::size_t>(k)];
      data.status(idx % n, idx / n) = CellStatus::Missing;
      data.values(idx % n, idx / n) = kMissingValue;
    }
    return data;
  }
  throw UnsupportedData("could not draw a missingness mask that leaves every column observed");
}

}  // namespace cghs
