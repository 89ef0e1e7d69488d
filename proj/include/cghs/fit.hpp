#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cghs/data.hpp"
#include "cghs/errors.hpp"
#include "cghs/nodewise.hpp"

namespace cghs {

/// Retained precision draws, stored as packed upper triangles (diagonal
/// included) to halve memory at larger p.
class DrawStore {
 public:
  DrawStore() = default;
  explicit DrawStore(Index p, Index reserve = 0) : p_(p) {
    data_.reserve(static_cast<std::size_t>(packed_size() * reserve));
  }

  Index dim() const noexcept { return p_; }
  Index size() const noexcept { return packed_size() == 0 ? 0 : static_cast<Index>(data_.size()) / packed_size(); }
  bool empty() const noexcept { return size() == 0; }
  Index packed_size() const noexcept { return p_ * (p_ + 1) / 2; }

  /// Offset of entry (i, j), i <= j, within one packed draw (column-major upper triangle).
  static Index packed_index(Index i, Index j) noexcept {
    if (i > j) std::swap(i, j);
    return j * (j + 1) / 2 + i;
  }

  /// Appends a draw after checking it is exactly symmetric with a positive diagonal.
  void push(const PrecisionDraw& omega) {
    if (omega.rows() != p_ || omega.cols() != p_) throw InvalidParameter("draw dimension mismatch");
    for (Index j = 0; j < p_; ++j) {
      if (!(omega(j, j) > 0.0) || !std::isfinite(omega(j, j))) {
        throw InvariantViolation("precision draw has a non-positive diagonal entry at " + std::to_string(j + 1));
      }
      for (Index i = 0; i < j; ++i) {
        if (omega(i, j) != omega(j, i)) throw InvariantViolation("precision draw is not exactly symmetric");
      }
    }
    for (Index j = 0; j < p_; ++j)
      for (Index i = 0; i <= j; ++i) data_.push_back(omega(i, j));
  }

  PrecisionDraw draw(Index t) const {
    PrecisionDraw out(p_, p_);
    const double* base = data_.data() + t * packed_size();
    for (Index j = 0; j < p_; ++j)
      for (Index i = 0; i <= j; ++i) out(i, j) = out(j, i) = base[packed_index(i, j)];
    return out;
  }

  /// Trajectory of entry (i, j) across retained draws.
  Eigen::VectorXd chain(Index i, Index j) const {
    const Index n = size(), stride = packed_size(), off = packed_index(i, j);
    Eigen::VectorXd out(n);
    for (Index t = 0; t < n; ++t) out[t] = data_[static_cast<std::size_t>(t * stride + off)];
    return out;
  }

 private:
  Index p_ = 0;
  std::vector<double> data_;
};

/// Result of a Gibbs run. Shared by the censored and missing-data samplers.
struct GibbsFit {
  DrawStore draws;
  SamplerConfig config;
  double seconds = 0.0;
  /// Sweeps after which the latent-matrix invariants were checked.
  int sweeps_verified = 0;
  std::vector<NodeState> final_states;
  LatentMatrix final_latent;
};

using CensoredFit = GibbsFit;
using MissingFit = GibbsFit;

}  // namespace cghs
