#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cghs/censored_sampler.hpp"
#include "cghs/errors.hpp"
#include "cghs/missing_sampler.hpp"
#include "cghs/simulation.hpp"
#include "oracles.hpp"

using cghs::CellStatus;
using cghs::Index;
using cghs::ObservedData;

namespace {

ObservedData mcar_fixture(Index n, Index p, double q, std::uint64_t seed) {
  cghs::RngStream rng(seed);
  const Eigen::MatrixXd y = cghs::sample_data(n, cghs::gen_setting1(p), rng);
  cghs::RngStream mask(seed + 1);
  return cghs::apply_mcar(ObservedData::complete(y), q, mask);
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

struct DenseConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Schur complement through an explicit dense inverse of the full matrix:
/// with P = Sigma^{-1}, cov_m = P_mm^{-1} and mean_m = -P_mm^{-1} P_mo z_o.
DenseConditional dense_conditional(const Eigen::MatrixXd& sigma, const std::vector<Index>& obs,
                                   const std::vector<Index>& mis, const Eigen::VectorXd& z_o) {
  const Eigen::MatrixXd prec = oracle::dense_inverse(sigma);
  Eigen::MatrixXd p_mm(mis.size(), mis.size()), p_mo(mis.size(), obs.size());
  for (std::size_t a = 0; a < mis.size(); ++a) {
    for (std::size_t b = 0; b < mis.size(); ++b) p_mm(a, b) = prec(mis[a], mis[b]);
    for (std::size_t b = 0; b < obs.size(); ++b) p_mo(a, b) = prec(mis[a], obs[b]);
  }
  const Eigen::MatrixXd cov = oracle::dense_inverse(p_mm);
  return {-cov * p_mo * z_o, cov};
}

}  // namespace

TEST(InitMissing, ColumnMeans) {
  Eigen::MatrixXd y(3, 2);
  y << 1.0, 0.0, cghs::kMissingValue, 0.0, 3.0, cghs::kMissingValue;
  ObservedData d = ObservedData::complete(y);
  d.status(1, 0) = CellStatus::Missing;
  d.status(2, 1) = CellStatus::Missing;
  const auto z = cghs::init_latent_missing(d);
  EXPECT_EQ(z(1, 0), 2.0);
  EXPECT_EQ(z(2, 1), 0.0);
  EXPECT_EQ(z(0, 0), 1.0);
  EXPECT_EQ(z(2, 0), 3.0);
}

TEST(InitMissing, NoMissingIsCopy) {
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(4, 3);
  EXPECT_EQ(cghs::init_latent_missing(ObservedData::complete(y)), y);
}

TEST(InitMissing, FullyMissingColumnIsUnsupported) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(3, 2);
  ObservedData d = ObservedData::complete(y);
  for (Index i = 0; i < 3; ++i) {
    d.status(i, 1) = CellStatus::Missing;
    d.values(i, 1) = cghs::kMissingValue;
  }
  EXPECT_THROW(cghs::init_latent_missing(d), cghs::UnsupportedData);
}

TEST(ConditionalGaussian, IdentityCovariance) {
  const std::vector<Index> obs{0, 2}, mis{1, 3};
  const auto c = cghs::conditional_gaussian(Eigen::MatrixXd::Identity(4, 4), obs, mis, Eigen::Vector2d(5.0, -3.0));
  EXPECT_EQ(c.mean, Eigen::Vector2d::Zero().eval());
  EXPECT_TRUE(c.cov.isApprox(Eigen::Matrix2d::Identity(), 1e-15));
}

TEST(ConditionalGaussian, BivariateHandExample) {
  Eigen::Matrix2d s;
  s << 1.0, 0.5, 0.5, 1.0;
  const std::vector<Index> obs{1}, mis{0};
  const auto c = cghs::conditional_gaussian(s, obs, mis, Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_NEAR(c.mean[0], 1.0, 1e-15);
  EXPECT_NEAR(c.cov(0, 0), 0.75, 1e-15);
}

TEST(ConditionalGaussian, EquicorrelatedHandExample) {
  Eigen::Matrix3d s = Eigen::Matrix3d::Constant(0.5);
  s.diagonal().setOnes();
  const std::vector<Index> obs{0, 1}, mis{2};
  const Eigen::Vector2d z_o(1.0, 1.0);
  const auto c = cghs::conditional_gaussian(s, obs, mis, z_o);
  EXPECT_NEAR(c.mean[0], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(c.cov(0, 0), 2.0 / 3.0, 1e-14);
  const auto o = dense_conditional(s, {0, 1}, {2}, z_o);
  EXPECT_NEAR(c.mean[0], o.mean[0], 1e-14);
  EXPECT_NEAR(c.cov(0, 0), o.cov(0, 0), 1e-14);
}

TEST(ConditionalGaussian, MatchesDenseInverseOracleOnRandomSpd) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int p = 2; p <= 8; ++p) {
    for (int rep = 0; rep < 25; ++rep) {
      const Eigen::MatrixXd s = oracle::random_spd(p, gen);
      std::vector<Index> obs, mis;
      std::uniform_int_distribution<int> coin(0, 1);
      for (Index j = 0; j < p; ++j) (coin(gen) ? mis : obs).push_back(j);
      if (mis.empty()) mis.push_back(obs.back()), obs.pop_back();
      if (obs.empty()) obs.push_back(mis.back()), mis.pop_back();
      std::sort(obs.begin(), obs.end());
      std::sort(mis.begin(), mis.end());
      Eigen::VectorXd z_o(obs.size());
      for (auto& v : z_o) v = nd(gen);
      const auto got = cghs::conditional_gaussian(s, obs, mis, z_o);
      const auto want = dense_conditional(s, obs, mis, z_o);
      const double em = (got.mean - want.mean).norm() / std::max(want.mean.norm(), 1e-300);
      const double ec = (got.cov - want.cov).norm() / want.cov.norm();
      worst = std::max({worst, em, ec});
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(ConditionalGaussian, EmptyObservedSetGivesMarginal) {
  std::mt19937_64 gen(32);
  const Eigen::MatrixXd s = oracle::random_spd(3, gen);
  const std::vector<Index> obs, mis{0, 1, 2};
  const auto c = cghs::conditional_gaussian(s, obs, mis, Eigen::VectorXd(0));
  EXPECT_EQ(c.mean, Eigen::VectorXd::Zero(3).eval());
  EXPECT_EQ(c.cov, s);
}

TEST(ImputeRow, DrawMomentsMatchSchur) {
  Eigen::Matrix2d s;
  s << 1.0, 0.5, 0.5, 1.0;
  Eigen::MatrixXd z(1, 2);
  z << 0.0, 2.0;
  const std::vector<Index> mis{0};
  cghs::RngStream rng(33);
  std::vector<double> draws(100000);
  for (auto& v : draws) {
    cghs::impute_missing_row(0, z, s, mis, rng);
    v = z(0, 0);
    ASSERT_EQ(z(0, 1), 2.0);
  }
  EXPECT_LE(oracle::ks_statistic(draws, [](double x) { return oracle::lower_tail((x - 1.0) / std::sqrt(0.75)); }),
            oracle::ks_critical_1pct(draws.size()));
}

TEST(ImputeRow, FactorFailureCarriesRowContext) {
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();  // singular observed block
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(5, 3);
  const std::vector<Index> mis{2};
  cghs::RngStream rng(1);
  try {
    cghs::impute_missing_row(4, z, s, mis, rng);
    FAIL() << "expected NumericalError";
  } catch (const cghs::NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("row 5"), std::string::npos) << e.what();
  }
}

TEST(ImputationCovariance, ProjectedSpectrumRespectsFloor) {
  Eigen::Matrix2d omega;
  omega << 1.0, 2.0, 2.0, 1.0;  // eigenvalues -1 and 3
  const auto sigma = cghs::imputation_covariance(omega, 1e-3);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma).eigenvalues();
  EXPECT_NEAR(ev.maxCoeff(), 1e3, 1e-9);
  EXPECT_NEAR(ev.minCoeff(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(sigma, sigma.transpose().eval());
}

TEST(RunMissing, RejectsCensoredInput) {
  cghs::RngStream rng(34);
  const Eigen::MatrixXd y = cghs::sample_data(30, cghs::gen_setting1(3), rng);
  const auto d = cghs::apply_fixed_censoring(y, cghs::alternating_thresholds(3), cghs::CensorSide::Left);
  try {
    cghs::run_missing_ghs(d, short_config(1));
    FAIL() << "expected InvalidInput";
  } catch (const cghs::InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("censored"), std::string::npos);
  }
}

TEST(RunMissing, InvariantsAndObservedCells) {
  const auto d = mcar_fixture(60, 5, 0.15, 35);
  const auto fit = cghs::run_missing_ghs(d, short_config(36));
  EXPECT_EQ(fit.draws.size(), 200);
  for (Index t = 0; t < fit.draws.size(); ++t) {
    const auto o = fit.draws.draw(t);
    ASSERT_EQ(o, o.transpose().eval());
    ASSERT_GT(o.diagonal().minCoeff(), 0.0);
  }
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j) {
      if (d.status(i, j) == CellStatus::Observed) {
        ASSERT_EQ(fit.final_latent(i, j), d.values(i, j));
      } else {
        ASSERT_TRUE(std::isfinite(fit.final_latent(i, j)));
      }
    }
}

TEST(RunMissing, FullyMissingRowIsImputed) {
  auto d = mcar_fixture(40, 4, 0.0, 37);
  for (Index j = 0; j < 4; ++j) {
    d.status(5, j) = CellStatus::Missing;
    d.values(5, j) = cghs::kMissingValue;
  }
  const auto fit = cghs::run_missing_ghs(d, short_config(38));
  EXPECT_TRUE(fit.final_latent.row(5).allFinite());
}

TEST(RunMissing, RowScheduleDoesNotChangeDraws) {
  const auto d = mcar_fixture(80, 6, 0.2, 39);
  EXPECT_TRUE(same_draws(cghs::run_missing_ghs(d, short_config(40, 1)), cghs::run_missing_ghs(d, short_config(40, 4))));
  EXPECT_TRUE(same_draws(cghs::run_missing_ghs(d, short_config(40, 3)), cghs::run_missing_ghs(d, short_config(40, 3))));
}

TEST(RunMissing, NoMissingCellsMatchesCompleteDataSampler) {
  // With nothing to impute both samplers run the same nodewise chain.
  const auto d = mcar_fixture(100, 5, 0.0, 41);
  EXPECT_TRUE(same_draws(cghs::run_missing_ghs(d, short_config(42)), cghs::run_censored_ghs(d, short_config(42))));
}
