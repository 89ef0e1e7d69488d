#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "cghs/data.hpp"
#include "cghs/distributions.hpp"
#include "cghs/errors.hpp"
#include "cghs/fit.hpp"
#include "cghs/gibbs.hpp"
#include "cghs/nodewise.hpp"
#include "cghs/parallel.hpp"
#include "cghs/rng.hpp"

namespace cghs {

/// Observed cells copied, missing cells set to their column's observed mean.
inline LatentMatrix init_latent_missing(const ObservedData& data) {
  LatentMatrix z = data.values;
  for (Index j = 0; j < data.cols(); ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.status(i, j) == CellStatus::Observed) {
        sum += data.values(i, j);
        ++count;
      }
    }
    if (count == 0) {
      throw UnsupportedData("column " + std::to_string(j + 1) + " has no observed cell");
    }
    const double mean = sum / static_cast<double>(count);
    for (Index i = 0; i < data.rows(); ++i) {
      if (data.status(i, j) == CellStatus::Missing) z(i, j) = mean;
    }
  }
  return z;
}

/// Law of z_m given z_o under N(0, sigma).
struct ConditionalGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// mean = S_mo S_oo^{-1} z_o, cov = S_mm - S_mo S_oo^{-1} S_om, via a
/// Cholesky solve against S_oo. An empty observed set gives the marginal.
inline ConditionalGaussian conditional_gaussian(const Eigen::MatrixXd& sigma, std::span<const Index> observed,
                                                std::span<const Index> missing,
                                                const Eigen::Ref<const Eigen::VectorXd>& z_observed) {
  const auto no = static_cast<Index>(observed.size());
  const auto nm = static_cast<Index>(missing.size());
  Eigen::MatrixXd s_mm(nm, nm);
  for (Index b = 0; b < nm; ++b)
    for (Index a = 0; a < nm; ++a) s_mm(a, b) = sigma(missing[a], missing[b]);
  if (no == 0) return {Eigen::VectorXd::Zero(nm), s_mm};

  Eigen::MatrixXd s_oo(no, no), s_om(no, nm);
  for (Index b = 0; b < no; ++b)
    for (Index a = 0; a < no; ++a) s_oo(a, b) = sigma(observed[a], observed[b]);
  for (Index b = 0; b < nm; ++b)
    for (Index a = 0; a < no; ++a) s_om(a, b) = sigma(observed[a], missing[b]);

  Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of the observed covariance block failed");
  const Eigen::MatrixXd k = llt.solve(s_om);  // S_oo^{-1} S_om
  ConditionalGaussian out;
  out.mean = k.transpose() * z_observed;
  out.cov = s_mm - s_om.transpose() * k;
  symmetrize_in_place(out.cov);
  return out;
}

namespace detail {

// Lower factor L with L L^T = cov; eigen-clips at zero if the Schur
// complement lost definiteness to rounding.
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the conditional covariance failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  // Not triangular, but L u still has covariance L L^T = cov.
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace detail

/// Replaces the missing coordinates of row i by one joint draw from their
/// conditional Gaussian given the observed coordinates.
inline void impute_missing_row(Index i, LatentMatrix& z, const Eigen::MatrixXd& sigma, std::span<const Index> missing,
                               RngStream& rng) {
  if (missing.empty()) return;
  const Index p = z.cols();
  std::vector<Index> observed;
  observed.reserve(static_cast<std::size_t>(p) - missing.size());
  for (Index j = 0, m = 0; j < p; ++j) {
    if (m < static_cast<Index>(missing.size()) && missing[static_cast<std::size_t>(m)] == j) {
      ++m;
    } else {
      observed.push_back(j);
    }
  }
  Eigen::VectorXd z_o(static_cast<Index>(observed.size()));
  for (Index a = 0; a < z_o.size(); ++a) z_o[a] = z(i, observed[static_cast<std::size_t>(a)]);

  ConditionalGaussian cond;
  try {
    cond = conditional_gaussian(sigma, observed, missing, z_o);
  } catch (const NumericalError& e) {
    throw NumericalError("row " + std::to_string(i + 1) + ": " + e.what());
  }
  const Eigen::MatrixXd factor = detail::covariance_factor(cond.cov);
  Eigen::VectorXd u(factor.cols());
  for (Index a = 0; a < u.size(); ++a) u[a] = rng.normal();
  const Eigen::VectorXd draw = cond.mean + factor * u;
  for (Index a = 0; a < draw.size(); ++a) z(i, missing[static_cast<std::size_t>(a)]) = draw[a];
}

/// Covariance for the imputation step: Omega projected to eigenvalues >=
/// floor, inverted through its eigendecomposition.
inline Eigen::MatrixXd imputation_covariance(const PrecisionDraw& omega, double floor) {
  const auto spec = clipped_spectrum(omega, floor);
  if (spec.eigenvalues.minCoeff() < floor) {
    throw InvariantViolation("projected precision has an eigenvalue below the floor");
  }
  Eigen::MatrixXd sigma =
      spec.eigenvectors * spec.eigenvalues.cwiseInverse().asDiagonal() * spec.eigenvectors.transpose();
  symmetrize_in_place(sigma);
  return sigma;
}

/// Gibbs sampler for data with missing cells: each sweep inverts the
/// projected Omega, imputes every incomplete row jointly, then runs the
/// nodewise horseshoe updates. Omega starts at the identity.
inline MissingFit run_missing_ghs(const ObservedData& data, const SamplerConfig& cfg) {
  cfg.validate();
  if (data.has_censoring()) {
    throw InvalidInput("data contains censored cells; use the censored sampler (mode=censored)");
  }
  data.validate();

  LatentMatrix z0 = init_latent_missing(data);
  std::vector<std::vector<Index>> missing(static_cast<std::size_t>(data.rows()));
  std::vector<Index> rows;
  for (Index i = 0; i < data.rows(); ++i) {
    auto& m = missing[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.cols(); ++j)
      if (data.status(i, j) == CellStatus::Missing) m.push_back(j);
    if (!m.empty()) rows.push_back(i);
  }

  return detail::run_gibbs(data, cfg, std::move(z0), [&](int sweep, detail::ChainState& chain) {
    if (rows.empty()) return;
    const Eigen::MatrixXd sigma = imputation_covariance(chain.omega, cfg.pd_floor);
    parallel_for(static_cast<Index>(rows.size()), chain.threads, [&](Index r) {
      const Index i = rows[static_cast<std::size_t>(r)];
      RngStream rng(cfg.seed, {static_cast<std::uint64_t>(sweep), static_cast<std::uint64_t>(i),
                               StreamPurpose::Impute});
      impute_missing_row(i, chain.z, sigma, missing[static_cast<std::size_t>(i)], rng);
    });
  });
}

}  // namespace cghs
