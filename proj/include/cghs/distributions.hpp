#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <boost/math/special_functions/erf.hpp>

#include "cghs/errors.hpp"
#include "cghs/rng.hpp"

namespace cghs {

/// Standardized bound beyond which truncated-normal draws switch from the
/// inverse CDF to exponential-proposal rejection.
inline constexpr double kTailSwitch = 5.0;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper-tail probability P(X >= x), accurate far into the right tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline void require_location_scale(double mu, double sigma, const char* who) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
    throw InvalidParameter(std::string(who) + ": need finite mu and sigma > 0 (mu=" +
                           std::to_string(mu) + ", sigma=" + std::to_string(sigma) + ")");
  }
}

// Robert (1995) one-sided rejection sampler with the optimal exponential rate.
inline double standard_tail_rejection(double a, RngStream& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / rate;
    const double d = z - rate;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

// Draw from N(0, 1) conditioned on X >= a.
inline double standard_lower_truncated(double a, RngStream& rng) {
  if (a == -std::numeric_limits<double>::infinity()) return rng.normal();
  if (a > kTailSwitch) return standard_tail_rejection(a, rng);
  // X = -Phi^{-1}(u * Phi(-a)); evaluated via erfc so the retained mass
  // keeps full relative precision when it is small.
  const double tail = normal_sf(a);
  const double x = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * rng.uniform() * tail);
  return std::max(x, a);
}

}  // namespace detail

/// N(mu, sigma^2) conditioned on x <= upper. upper = +inf gives a plain draw.
inline double sample_trunc_normal_upper(double mu, double sigma, double upper, RngStream& rng) {
  detail::require_location_scale(mu, sigma, "sample_trunc_normal_upper");
  if (std::isnan(upper)) throw InvalidParameter("sample_trunc_normal_upper: NaN bound");
  if (upper == std::numeric_limits<double>::infinity()) return mu + sigma * rng.normal();
  const double b = (upper - mu) / sigma;
  const double x = mu - sigma * detail::standard_lower_truncated(-b, rng);
  return std::min(x, upper);
}

/// N(mu, sigma^2) conditioned on x >= lower. lower = -inf gives a plain draw.
inline double sample_trunc_normal_lower(double mu, double sigma, double lower, RngStream& rng) {
  detail::require_location_scale(mu, sigma, "sample_trunc_normal_lower");
  if (std::isnan(lower)) throw InvalidParameter("sample_trunc_normal_lower: NaN bound");
  if (lower == -std::numeric_limits<double>::infinity()) return mu + sigma * rng.normal();
  const double a = (lower - mu) / sigma;
  const double x = mu + sigma * detail::standard_lower_truncated(a, rng);
  return std::max(x, lower);
}

/// Inverse-gamma draw, shape-rate parameterization (density ~ x^{-a-1} e^{-b/x}).
inline double sample_inverse_gamma(double shape, double rate, RngStream& rng) {
  if (!std::isfinite(shape) || !std::isfinite(rate) || !(shape > 0.0) || !(rate > 0.0)) {
    throw InvalidParameter("sample_inverse_gamma: need finite shape > 0 and rate > 0 (shape=" +
                           std::to_string(shape) + ", rate=" + std::to_string(rate) + ")");
  }
  // Tiny shapes can underflow the gamma draw to zero.
  const double g = std::max(rng.gamma(shape, rate), std::numeric_limits<double>::min());
  return 1.0 / g;
}

/// mean + L u with u ~ N(0, I), where L L^T is the target covariance.
inline Eigen::VectorXd sample_gaussian_vector(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                              const Eigen::Ref<const Eigen::MatrixXd>& cov_chol,
                                              RngStream& rng) {
  const auto k = mean.size();
  if (cov_chol.rows() != k || cov_chol.cols() != k) {
    throw InvalidParameter("sample_gaussian_vector: factor dimension does not match mean");
  }
  if (!cov_chol.allFinite() || !mean.allFinite()) {
    throw InvalidParameter("sample_gaussian_vector: non-finite mean or factor");
  }
  Eigen::VectorXd u(k);
  for (Eigen::Index i = 0; i < k; ++i) u[i] = rng.normal();
  return mean + cov_chol.triangularView<Eigen::Lower>() * u;
}

/// mean + scale * L^{-T} u, where L L^T = A is a precision-type matrix, so
/// the draw has covariance scale^2 * A^{-1} without forming the inverse.
inline Eigen::VectorXd sample_gaussian_precision(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& prec_chol,
                                                 double scale, RngStream& rng) {
  const auto k = mean.size();
  if (prec_chol.rows() != k || prec_chol.cols() != k) {
    throw InvalidParameter("sample_gaussian_precision: factor dimension does not match mean");
  }
  if (!prec_chol.allFinite() || !mean.allFinite() || !std::isfinite(scale)) {
    throw InvalidParameter("sample_gaussian_precision: non-finite input");
  }
  Eigen::VectorXd u(k);
  for (Eigen::Index i = 0; i < k; ++i) u[i] = rng.normal();
  prec_chol.triangularView<Eigen::Lower>().transpose().solveInPlace(u);
  return mean + scale * u;
}

}  // namespace cghs
