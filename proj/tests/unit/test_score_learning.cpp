#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pfode/errors.hpp"
#include "pfode/score_learning.hpp"

using namespace pfode;

namespace {

Eigen::VectorXd spectrum(Eigen::Index m) {
  Eigen::VectorXd lam(m);
  for (Eigen::Index n = 0; n < m; ++n) lam[n] = 1.2 / double(n + 1);
  return lam;
}

double bin_center(const AffineScoreModel& model, std::size_t b) {
  return 0.5 * (model.edges()[Eigen::Index(b)] + model.edges()[Eigen::Index(b) + 1]);
}

}  // namespace

TEST(AffineModel, BinsAreRightClosed) {
  const AffineScoreModel z = AffineScoreModel::zeros(4, 2, 0.0 + 1e-3, 1.0);
  const double w = (1.0 - 1e-3) / 4;
  EXPECT_EQ(z.bin_of(1e-3), 0u);
  EXPECT_EQ(z.bin_of(1e-3 + w), 0u);
  EXPECT_EQ(z.bin_of(1e-3 + w + 1e-9), 1u);
  EXPECT_EQ(z.bin_of(1.0), 3u);
  EXPECT_THROW(z.bin_of(1e-4), OutOfRange);
  EXPECT_THROW(z.bin_of(1.0 + 1e-12), OutOfRange);
}

TEST(AffineModel, EvaluateExamples) {
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(3, -1.0, 2.0);
  const AffineScoreModel z = AffineScoreModel::zeros(2, 3);
  EXPECT_TRUE(z.evaluate(0.5, u).isZero(0.0));
  const AffineScoreModel neg(z.edges(), -Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Zero(2, 3));
  EXPECT_EQ(neg.as_score()(0.7, u), -u);
  EXPECT_THROW(neg.evaluate(0.7, Eigen::VectorXd::Zero(2)), DimensionMismatch);
  EXPECT_THROW(AffineScoreModel(Eigen::VectorXd::LinSpaced(3, 1.0, 0.0), Eigen::MatrixXd::Zero(2, 1),
                                Eigen::MatrixXd::Zero(2, 1)),
               InvalidArgument);
}

TEST(DsmTargets, EmptyAndPointMassAtZero) {
  const Eigen::VectorXd lam = spectrum(3);
  const NoiseSchedule s = NoiseSchedule::cosine();
  const MixtureDataSpec zero = MixtureDataSpec::point_mass(Eigen::VectorXd::Zero(3));
  EXPECT_EQ(dsm_targets(zero, lam, s, 0.4, 0, 1).xt.rows(), 0);
  const DsmBatch b = dsm_targets(zero, lam, s, 0.4, 100, 1);
  EXPECT_EQ(b.target, -b.xt / s.noise_variance_factor(0.4));
}

TEST(DsmTargets, TargetsHaveZeroMean) {
  const Eigen::VectorXd lam = spectrum(3);
  const NoiseSchedule s = NoiseSchedule::cosine();
  const MixtureDataSpec spec = MixtureDataSpec::gaussian(Eigen::VectorXd::Ones(3), 0.5 * lam);
  const DsmBatch b = dsm_targets(spec, lam, s, 0.5, 100000, 2);
  for (Eigen::Index n = 0; n < 3; ++n) {
    const Eigen::VectorXd col = b.target.col(n);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    EXPECT_NEAR(mean, 0.0, 5 * sd / std::sqrt(1e5));
  }
}

TEST(Fit, StationaryDataGivesMinusIdentity) {
  const Eigen::VectorXd lam = spectrum(3);
  const NoiseSchedule s = NoiseSchedule::cosine();
  TrainingConfig cfg;
  cfg.bins = 8;
  cfg.seed = 3;
  const AffineScoreModel model = fit(MixtureDataSpec::stationary(lam), lam, s, cfg);
  // Each slope is a ratio of chi-square sums with sd about 2 / sqrt(n) = 0.013,
  // so 0.02 bounds the typical error; the worst of 24 coefficients gets more room.
  const Eigen::ArrayXXd err = model.slope().array() + 1.0;
  EXPECT_LT(std::sqrt(err.square().mean()), 0.02);
  EXPECT_LT(err.abs().maxCoeff(), 0.05);
  // Intercept is measured against the coefficient scale sqrt(lambda).
  for (Eigen::Index n = 0; n < 3; ++n)
    EXPECT_LT(model.intercept().col(n).cwiseAbs().maxCoeff(), 0.02 * std::sqrt(lam[n]));
}

TEST(Fit, HugeRidgeShrinksToZero) {
  const Eigen::VectorXd lam = spectrum(2);
  TrainingConfig cfg;
  cfg.bins = 2;
  cfg.samples_per_bin = 200;
  cfg.ridge = 1e12;
  const AffineScoreModel model = fit(MixtureDataSpec::stationary(lam), lam, NoiseSchedule::cosine(), cfg);
  EXPECT_LT(model.slope().cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(model.intercept().cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Fit, RecoversGaussianCoefficientsAtBinCenters) {
  const Eigen::VectorXd lam = spectrum(2);
  const NoiseSchedule s = NoiseSchedule::cosine();
  Eigen::VectorXd mu(2);
  mu << 1.5, -0.8;
  const MixtureDataSpec spec = MixtureDataSpec::gaussian(mu, 0.4 * lam);
  TrainingConfig cfg;
  cfg.seed = 17;
  const AffineScoreModel model = fit(spec, lam, s, cfg);
  for (std::size_t b = 0; b < model.bins(); ++b) {
    const auto [slope, intercept] = gaussian_score_coefficients(spec, lam, s, bin_center(model, b));
    for (Eigen::Index n = 0; n < 2; ++n) {
      EXPECT_NEAR(model.slope()(Eigen::Index(b), n), slope[n], 0.05 * std::abs(slope[n])) << "bin " << b;
    }
  }
}

TEST(Fit, FittedScoreTracksOracle) {
  const Eigen::VectorXd lam = spectrum(3);
  const NoiseSchedule s = NoiseSchedule::cosine();
  const MixtureDataSpec spec = MixtureDataSpec::gaussian(Eigen::VectorXd::Constant(3, 0.7), 0.5 * lam);
  TrainingConfig cfg;
  cfg.seed = 5;
  const AffineScoreModel model = fit(spec, lam, s, cfg);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uniform(cfg.t_min, 1.0);
  double err2 = 0.0, ref2 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = uniform(rng);
    const Eigen::VectorXd u = perturb(sample_mixture(spec, 1, std::uint64_t(i)).row(0).transpose(), lam, s, t,
                                      std::uint64_t(i));
    const Eigen::VectorXd ref = log_gradient(spec, lam, s, t, u);
    err2 += (model.evaluate(t, u) - ref).squaredNorm();
    ref2 += ref.squaredNorm();
  }
  EXPECT_LE(std::sqrt(err2), 0.05 * std::sqrt(ref2));
}

TEST(Fit, SerialAndParallelAgreeBitwise) {
  const Eigen::VectorXd lam = spectrum(3);
  const NoiseSchedule s = NoiseSchedule::cosine();
  const MixtureDataSpec spec = MixtureDataSpec::gaussian(Eigen::VectorXd::Ones(3), 0.3 * lam);
  TrainingConfig cfg;
  cfg.samples_per_bin = 2000;
  cfg.exec = Exec::serial;
  const AffineScoreModel a = fit(spec, lam, s, cfg);
  cfg.exec = Exec::parallel;
  const AffineScoreModel b = fit(spec, lam, s, cfg);
  EXPECT_EQ(a.slope(), b.slope());
  EXPECT_EQ(a.intercept(), b.intercept());
}

TEST(Fit, AntitheticPairsReduceSmallTimeError) {
  const Eigen::VectorXd lam = spectrum(2);
  const NoiseSchedule s = NoiseSchedule::cosine();
  const MixtureDataSpec spec = MixtureDataSpec::gaussian(Eigen::VectorXd::Constant(2, 2.0), 0.5 * lam);
  const auto first_bin_error = [&](bool antithetic) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      TrainingConfig cfg;
      cfg.samples_per_bin = 4000;
      cfg.antithetic = antithetic;
      cfg.seed = seed;
      const AffineScoreModel m = fit(spec, lam, s, cfg);
      const auto [slope, intercept] = gaussian_score_coefficients(spec, lam, s, bin_center(m, 0));
      acc += std::abs(m.slope()(0, 0) / slope[0] - 1.0);
    }
    return acc;
  };
  EXPECT_LT(first_bin_error(true), first_bin_error(false));
}

TEST(Fit, DegenerateDataIsSingular) {
  const Eigen::VectorXd lam = Eigen::VectorXd::Zero(1);
  TrainingConfig cfg;
  cfg.bins = 1;
  cfg.samples_per_bin = 20;
  cfg.ridge = 0.0;
  EXPECT_THROW(fit(MixtureDataSpec::point_mass(Eigen::VectorXd::Zero(1)), lam, NoiseSchedule::cosine(), cfg),
               SingularFit);
  cfg.samples_per_bin = 5;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(DsmLoss, OracleModelBeatsZeroModel) {
  const Eigen::VectorXd lam = spectrum(3);
  const NoiseSchedule s = NoiseSchedule::cosine();
  const MixtureDataSpec spec = MixtureDataSpec::gaussian(Eigen::VectorXd::Ones(3), 0.5 * lam);
  const double t = 0.6;
  const DsmBatch batch = dsm_targets(spec, lam, s, t, 20000, 9);
  const auto [slope, intercept] = gaussian_score_coefficients(spec, lam, s, t);
  const AffineScoreModel zero = AffineScoreModel::zeros(1, 3);
  const AffineScoreModel oracle(zero.edges(), slope.transpose(), intercept.transpose());
  EXPECT_LT(dsm_loss(oracle, t, batch), dsm_loss(zero, t, batch));
  // The oracle should also beat a slightly perturbed slope.
  const AffineScoreModel off(zero.edges(), 1.1 * slope.transpose(), intercept.transpose());
  EXPECT_LT(dsm_loss(oracle, t, batch), dsm_loss(off, t, batch));
  EXPECT_EQ(dsm_loss(oracle, t, DsmBatch{}), 0.0);
}

TEST(ModelCsv, RoundTripIsExact) {
  const Eigen::VectorXd lam = spectrum(2);
  TrainingConfig cfg;
  cfg.bins = 3;
  cfg.samples_per_bin = 500;
  const AffineScoreModel m =
      fit(MixtureDataSpec::stationary(lam), lam, NoiseSchedule::cosine(), cfg);
  std::stringstream ss;
  write_model_csv(ss, m);
  EXPECT_EQ(ss.str().substr(0, 10), "bin_edges,");
  const AffineScoreModel r = read_model_csv(ss);
  EXPECT_EQ(r.edges(), m.edges());
  EXPECT_EQ(r.slope(), m.slope());
  EXPECT_EQ(r.intercept(), m.intercept());
}
