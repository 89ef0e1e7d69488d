#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cghs/censored_sampler.hpp"
#include "cghs/errors.hpp"
#include "cghs/simulation.hpp"
#include "oracles.hpp"

using cghs::CellStatus;
using cghs::Index;
using cghs::NodeState;
using cghs::ObservedData;

namespace {

/// Setting-I style data with alternating left thresholds at +-0.5.
ObservedData censored_fixture(Index n, Index p, std::uint64_t seed) {
  cghs::RngStream rng(seed);
  const auto truth = cghs::gen_setting1(p);
  const Eigen::MatrixXd y = cghs::sample_data(n, truth, rng);
  return cghs::apply_fixed_censoring(y, cghs::alternating_thresholds(p), cghs::CensorSide::Left);
}

cghs::SamplerConfig short_config(std::uint64_t seed, int threads = 1) {
  cghs::SamplerConfig cfg;
  cfg.n_iter = 300;
  cfg.burn_in = 100;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

bool same_draws(const cghs::GibbsFit& a, const cghs::GibbsFit& b) {
  if (a.draws.size() != b.draws.size()) return false;
  for (Index t = 0; t < a.draws.size(); ++t)
    if (a.draws.draw(t) != b.draws.draw(t)) return false;
  return true;
}

}  // namespace

TEST(InitLatent, ObservedDataIsCopied) {
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(5, 3);
  cghs::RngStream rng(1);
  EXPECT_EQ(cghs::init_latent_censored(ObservedData::complete(y), rng), y);
}

TEST(InitLatent, CensoredCellsStartOnTheirSide) {
  Eigen::MatrixXd y(4, 2);
  y << -0.5, 40, 1.0, 40, -0.5, 12, -2.0, 40;
  ObservedData d = ObservedData::complete(y);
  d.thresholds = {-0.5, 40.0};
  for (Index i : {0, 2}) d.status(i, 0) = CellStatus::CensoredLeft;
  for (Index i : {0, 1, 3}) d.status(i, 1) = CellStatus::CensoredRight;
  d.validate();
  cghs::RngStream rng(2);
  const auto z = cghs::init_latent_censored(d, rng);
  EXPECT_LE(z(0, 0), -0.5);
  EXPECT_LE(z(2, 0), -0.5);
  EXPECT_EQ(z(1, 0), 1.0);
  EXPECT_EQ(z(3, 0), -2.0);
  for (Index i : {0, 1, 3}) EXPECT_GE(z(i, 1), 40.0);
  EXPECT_EQ(z(2, 1), 12.0);
}

TEST(ImputeCell, ZeroCoefficientsGiveTruncatedStandardNormal) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(1, 2);
  ObservedData d = ObservedData::complete(y);
  d.status(0, 0) = CellStatus::CensoredLeft;
  d.thresholds[0] = 0.0;
  auto state = NodeState::neutral(1);
  cghs::RngStream rng(3);
  Eigen::MatrixXd z = y;
  std::vector<double> draws(50000);
  for (auto& v : draws) {
    cghs::impute_censored_cell(0, 0, z, state, d, rng);
    v = z(0, 0);
    ASSERT_LE(v, 0.0);
  }
  EXPECT_LE(oracle::ks_statistic(draws, [](double x) { return std::min(1.0, 2.0 * oracle::lower_tail(x)); }),
            oracle::ks_critical_1pct(draws.size()));
}

TEST(ImputeCell, MillsRatioMean) {
  // theta = 0.5, neighbour 2, sigma2 = 0.25, left-censored at 0.9:
  // N(1, 0.25) truncated above at 0.9.
  Eigen::MatrixXd y(1, 2);
  y << 0.9, 2.0;
  ObservedData d = ObservedData::complete(y);
  d.status(0, 0) = CellStatus::CensoredLeft;
  d.thresholds[0] = 0.9;
  auto state = NodeState::neutral(1);
  state.theta[0] = 0.5;
  state.sigma2 = 0.25;
  const double mu = 1.0, sd = 0.5, b = (0.9 - mu) / sd;
  const double ratio = oracle::phi(b) / oracle::lower_tail(b);
  const double want = mu - sd * ratio;
  const double var = sd * sd * (1.0 - b * ratio - ratio * ratio);

  cghs::RngStream rng(4);
  Eigen::MatrixXd z = y;
  const int n = 100000;
  double sum = 0.0;
  for (int t = 0; t < n; ++t) {
    cghs::impute_censored_cell(0, 0, z, state, d, rng);
    sum += z(0, 0);
    ASSERT_EQ(z(0, 1), 2.0);
  }
  EXPECT_NEAR(sum / n, want, 3.0 * std::sqrt(var / n));
}

TEST(ImputeCell, MissingCellIsUntruncated) {
  Eigen::MatrixXd y(1, 2);
  y << 0.0, 1.0;
  ObservedData d = ObservedData::complete(y);
  d.status(0, 0) = CellStatus::Missing;
  d.values(0, 0) = cghs::kMissingValue;
  auto state = NodeState::neutral(1);
  state.sigma2 = 2.0;
  cghs::RngStream rng(5);
  Eigen::MatrixXd z = y;
  std::vector<double> draws(50000);
  for (auto& v : draws) {
    cghs::impute_censored_cell(0, 0, z, state, d, rng);
    v = z(0, 0);
  }
  EXPECT_LE(oracle::ks_statistic(draws, [](double x) { return oracle::lower_tail(x / std::sqrt(2.0)); }),
            oracle::ks_critical_1pct(draws.size()));
}

TEST(ImputeCell, ObservedCellIsNeverTouched) {
  Eigen::MatrixXd y(1, 2);
  y << 0.125, 1.0;
  const ObservedData d = ObservedData::complete(y);
  auto state = NodeState::neutral(1);
  state.theta[0] = 3.0;
  cghs::RngStream rng(6);
  Eigen::MatrixXd z = y;
  cghs::impute_censored_cell(0, 0, z, state, d, rng);
  EXPECT_EQ(z(0, 0), 0.125);
}

TEST(RunCensored, DrawCountAndInvariants) {
  const auto d = censored_fixture(60, 4, 7);
  auto cfg = short_config(8);
  cfg.thin = 3;
  const auto fit = cghs::run_censored_ghs(d, cfg);
  EXPECT_EQ(fit.draws.size(), (300 - 100) / 3);
  EXPECT_EQ(fit.sweeps_verified, 300);
  for (Index t = 0; t < fit.draws.size(); ++t) {
    const auto o = fit.draws.draw(t);
    ASSERT_EQ(o, o.transpose().eval());
    ASSERT_GT(o.diagonal().minCoeff(), 0.0);
  }
  EXPECT_NO_THROW(cghs::verify_latent(d, fit.final_latent));
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j)
      if (d.status(i, j) == CellStatus::Observed) { ASSERT_EQ(fit.final_latent(i, j), d.values(i, j)); }
}

TEST(RunCensored, RightCensoringRespectsBounds) {
  cghs::RngStream rng(9);
  const Eigen::MatrixXd y = cghs::sample_data(50, cghs::gen_setting2(4), rng);
  const std::vector<double> c{0.3, 0.0, std::numeric_limits<double>::infinity(), 0.5};
  const auto d = cghs::apply_fixed_censoring(y, c, cghs::CensorSide::Right);
  ASSERT_TRUE(d.has(CellStatus::CensoredRight));
  const auto fit = cghs::run_censored_ghs(d, short_config(10));
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j)
      if (d.status(i, j) == CellStatus::CensoredRight) { ASSERT_GE(fit.final_latent(i, j), *d.thresholds[j]); }
}

TEST(RunCensored, MixedCensoredAndMissing) {
  auto d = censored_fixture(60, 4, 11);
  d.status(3, 1) = CellStatus::Missing;
  d.values(3, 1) = cghs::kMissingValue;
  d.status(7, 2) = CellStatus::Missing;
  d.values(7, 2) = cghs::kMissingValue;
  const auto fit = cghs::run_censored_ghs(d, short_config(12));
  EXPECT_TRUE(std::isfinite(fit.final_latent(3, 1)));
  EXPECT_EQ(fit.draws.size(), 200);
}

TEST(RunCensored, SameSeedIsBitIdentical) {
  const auto d = censored_fixture(80, 5, 13);
  EXPECT_TRUE(same_draws(cghs::run_censored_ghs(d, short_config(14)), cghs::run_censored_ghs(d, short_config(14))));
  EXPECT_FALSE(same_draws(cghs::run_censored_ghs(d, short_config(14)), cghs::run_censored_ghs(d, short_config(15))));
}

TEST(RunCensored, ThreadCountDoesNotChangeDraws) {
  const auto d = censored_fixture(80, 6, 16);
  const auto one = cghs::run_censored_ghs(d, short_config(17, 1));
  const auto four = cghs::run_censored_ghs(d, short_config(17, 4));
  EXPECT_TRUE(same_draws(one, four));
}

TEST(RunCensored, MinusInfinityThresholdsEqualCompleteData) {
  cghs::RngStream rng(18);
  const Eigen::MatrixXd y = cghs::sample_data(100, cghs::gen_setting1(5), rng);
  const std::vector<double> c(5, -std::numeric_limits<double>::infinity());
  const auto censored = cghs::apply_fixed_censoring(y, c, cghs::CensorSide::Left);
  EXPECT_TRUE(same_draws(cghs::run_censored_ghs(censored, short_config(19)),
                         cghs::run_censored_ghs(ObservedData::complete(y), short_config(19))));
}

TEST(RunCensored, RejectsInvalidConfig) {
  const auto d = censored_fixture(20, 3, 20);
  auto cfg = short_config(1);
  cfg.burn_in = cfg.n_iter;
  EXPECT_THROW(cghs::run_censored_ghs(d, cfg), cghs::InvalidInput);
  cfg = short_config(1);
  cfg.thin = 0;
  EXPECT_THROW(cghs::run_censored_ghs(d, cfg), cghs::InvalidInput);
}

TEST(RunCensored, RejectsInconsistentData) {
  auto d = censored_fixture(20, 3, 21);
  d.values(0, 0) = 0.0;
  d.status(0, 0) = CellStatus::CensoredLeft;
  EXPECT_THROW(cghs::run_censored_ghs(d, short_config(1)), cghs::InvalidInput);
}

TEST(VerifyLatent, DetectsViolations) {
  const auto d = censored_fixture(30, 3, 22);
  cghs::RngStream rng(1);
  auto z = cghs::init_latent_censored(d, rng);
  EXPECT_NO_THROW(cghs::verify_latent(d, z));
  Index ci = -1, cj = -1, oi = -1, oj = -1;
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j) {
      if (d.status(i, j) == CellStatus::CensoredLeft) ci = i, cj = j;
      if (d.status(i, j) == CellStatus::Observed) oi = i, oj = j;
    }
  ASSERT_GE(ci, 0);
  auto bad = z;
  bad(ci, cj) = *d.thresholds[cj] + 1e-12;
  EXPECT_THROW(cghs::verify_latent(d, bad), cghs::InvariantViolation);
  bad = z;
  bad(oi, oj) = std::nextafter(bad(oi, oj), 1e9);
  EXPECT_THROW(cghs::verify_latent(d, bad), cghs::InvariantViolation);
}
