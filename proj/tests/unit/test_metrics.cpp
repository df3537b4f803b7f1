#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pfode/errors.hpp"
#include "pfode/metrics.hpp"

using namespace pfode;

namespace {

Eigen::MatrixXd normal_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  x.col(0).array() += shift;
  return x;
}

// Replicating every atom to a common size turns unequal sizes into equal ones.
double w2_by_replication(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  std::vector<double> ra, rb;
  for (double v : a) ra.insert(ra.end(), std::size_t(b.size()), v);
  for (double v : b) rb.insert(rb.end(), std::size_t(a.size()), v);
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) acc += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return std::sqrt(acc / double(ra.size()));
}

double kernel(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::MatrixXd& y, Eigen::Index j, double h) {
  return std::exp(-(x.row(i) - y.row(j)).squaredNorm() / (2 * h * h));
}

double mmd2_double_loop(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double h) {
  const Eigen::Index n = a.rows(), m = b.rows();
  double xx = 0, yy = 0, xy = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) xx += kernel(a, i, a, j, h);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) yy += kernel(b, i, b, j, h);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) xy += kernel(a, i, b, j, h);
  return xx / double(n * (n - 1)) + yy / double(m * (m - 1)) - 2 * xy / double(n * m);
}

}  // namespace

TEST(Wasserstein1d, Examples) {
  const Eigen::VectorXd a = normal_rows(50, 1, 1).col(0);
  EXPECT_EQ(wasserstein2_1d(a, a), 0.0);
  EXPECT_EQ(wasserstein2_1d(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 3.0)), 3.0);
  EXPECT_THROW(wasserstein2_1d(Eigen::VectorXd(), a), InvalidArgument);
}

TEST(Wasserstein1d, UnequalSizesMatchReplication) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd a = normal_rows(7 + Eigen::Index(seed), 1, seed).col(0);
    const Eigen::VectorXd b = normal_rows(12, 1, seed + 100, 0.5).col(0);
    EXPECT_NEAR(wasserstein2_1d(a, b), w2_by_replication(a, b), 1e-12);
  }
}

TEST(SlicedWasserstein, GaussianShiftMatchesOracles) {
  const SampleSet a{normal_rows(10000, 2, 1)};
  const SampleSet b{normal_rows(10000, 2, 2, 1.0)};
  const double sw = sliced_wasserstein(a, b, 128, 7);
  // Same directions, separate code path.
  const Eigen::MatrixXd dirs = random_directions(128, 2, 7);
  double brute = 0.0, analytic = 0.0;
  for (Eigen::Index p = 0; p < 128; ++p) {
    std::vector<double> x(10000), y(10000);
    for (Eigen::Index i = 0; i < 10000; ++i) {
      x[std::size_t(i)] = a.samples.row(i).dot(dirs.row(p));
      y[std::size_t(i)] = b.samples.row(i).dot(dirs.row(p));
    }
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
    brute += std::sqrt(acc / 1e4);
    // Equal covariances: W2 of the projections is the projected mean shift.
    analytic += std::abs(dirs(p, 0));
  }
  EXPECT_NEAR(sw, brute / 128, 1e-12);
  EXPECT_NEAR(sw, analytic / 128, 0.05 * analytic / 128);
  EXPECT_NEAR(analytic / 128, 2 / std::numbers::pi, 0.1);
}

TEST(SlicedWasserstein, AxiomsAndDeterminism) {
  const SampleSet a{normal_rows(60, 5, 1)};
  const SampleSet b{normal_rows(60, 5, 2, 0.3)};
  const SampleSet c{normal_rows(60, 5, 3, -0.4)};
  EXPECT_EQ(sliced_wasserstein(a, a, 64, 1), 0.0);
  EXPECT_EQ(sliced_wasserstein(a, b, 64, 1), sliced_wasserstein(b, a, 64, 1));
  EXPECT_LE(sliced_wasserstein(a, c, 64, 1), sliced_wasserstein(a, b, 64, 1) + sliced_wasserstein(b, c, 64, 1));
  EXPECT_EQ(sliced_wasserstein(a, b, 64, 1, Exec::serial), sliced_wasserstein(a, b, 64, 1, Exec::parallel));
  const Eigen::MatrixXd dirs = random_directions(10, 5, 3);
  EXPECT_NEAR((dirs.rowwise().norm().array() - 1.0).abs().maxCoeff(), 0.0, 1e-15);
  EXPECT_THROW(sliced_wasserstein(a, SampleSet{normal_rows(5, 4, 1)}, 8, 1), DimensionMismatch);
}

TEST(Fpca, RankOneDataAlignsWithDirection) {
  Eigen::VectorXd v(4);
  v << 1.0, -2.0, 0.5, 1.5;
  v.normalize();
  const Eigen::VectorXd t = normal_rows(30, 1, 4).col(0);
  const SampleSet s{t * v.transpose() + Eigen::MatrixXd::Constant(30, 4, 2.0)};
  const FpcaResult f = fpca_scores(s, 1);
  EXPECT_NEAR(std::abs(f.components.col(0).dot(v)), 1.0, 1e-12);
  EXPECT_THROW(fpca_scores(s, 2), RankDeficient);
  EXPECT_THROW(fpca_scores(s, 0), InvalidArgument);
}

TEST(Fpca, ExplainedOrderingAndReconstruction) {
  const SampleSet s{normal_rows(40, 6, 5) * Eigen::VectorXd::LinSpaced(6, 3.0, 0.5).asDiagonal(), 0.25};
  const FpcaResult f = fpca_scores(s, 6);
  for (Eigen::Index k = 1; k < 6; ++k) EXPECT_LE(f.explained[k], f.explained[k - 1]);
  const Eigen::MatrixXd back = (f.scores * f.components.transpose()).rowwise() + f.mean;
  EXPECT_LT((back - s.samples).cwiseAbs().maxCoeff(), 1e-8);
  // Components are orthonormal under the weighted inner product.
  EXPECT_TRUE((0.25 * f.components.transpose() * f.components).isApprox(Eigen::MatrixXd::Identity(6, 6), 1e-12));
}

TEST(Mmd, MatchesDoubleLoop) {
  const Eigen::MatrixXd a = normal_rows(30, 3, 1);
  const Eigen::MatrixXd b = normal_rows(45, 3, 2, 0.7);
  EXPECT_NEAR(mmd2(a, b, 1.3), mmd2_double_loop(a, b, 1.3), 1e-12);
  EXPECT_NEAR(mmd2(a, a, 1.3), mmd2_double_loop(a, a, 1.3), 1e-12);
  EXPECT_NEAR(mmd2_biased(a, a, 1.3), 0.0, 1e-15);
  EXPECT_EQ(mmd2(a, b, std::nullopt, Exec::serial), mmd2(a, b, std::nullopt, Exec::parallel));
}

TEST(Mmd, SeparatedClustersApproachTwo) {
  Eigen::MatrixXd a = 1e-3 * normal_rows(20, 2, 1);
  Eigen::MatrixXd b = 1e-3 * normal_rows(20, 2, 2);
  b.col(0).array() += 100.0;
  EXPECT_NEAR(mmd2(a, b, 1.0), 2.0, 1e-4);
}

TEST(Mmd, PermutationInvariant) {
  const Eigen::MatrixXd a = normal_rows(25, 3, 1);
  const Eigen::MatrixXd b = normal_rows(25, 3, 2, 0.5);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(25);
  perm.setIdentity();
  std::mt19937_64 rng(3);
  std::shuffle(perm.indices().data(), perm.indices().data() + 25, rng);
  EXPECT_NEAR(mmd2(perm * a, b, 1.0), mmd2(a, b, 1.0), 1e-14);
  EXPECT_NEAR(mmd2(a, perm * b, 1.0), mmd2(a, b, 1.0), 1e-14);
}

TEST(PermutationTest, PValueBounds) {
  TestConfig cfg;
  cfg.permutations = 199;
  const SampleSet a{normal_rows(50, 4, 1)};
  const SampleSet b{normal_rows(50, 4, 2, 5.0)};
  const PermutationTest far = fpca_mmd_test(a, b, cfg, 1);
  EXPECT_DOUBLE_EQ(far.p_value, 1.0 / 200.0);
  EXPECT_TRUE(far.reject);
  const PermutationTest same = fpca_mmd_test(a, a, cfg, 1);
  EXPECT_GT(same.p_value, 0.05);
  EXPECT_FALSE(same.reject);
}

TEST(TestPower, NullCalibration) {
  TestConfig cfg;
  cfg.seed = 11;
  const SampleSource gen = [](std::size_t t) { return SampleSet{normal_rows(100, 5, 2 * t + 1)}; };
  const SampleSource ref = [](std::size_t t) { return SampleSet{normal_rows(100, 5, 2 * t + 2)}; };
  const double power = test_power(gen, ref, cfg);
  EXPECT_LE(power, 0.13);
}

TEST(TestPower, DetectsMeanShift) {
  TestConfig cfg;
  cfg.seed = 12;
  const SampleSource gen = [](std::size_t t) { return SampleSet{normal_rows(200, 5, 2 * t + 1)}; };
  const SampleSource ref = [](std::size_t t) { return SampleSet{normal_rows(200, 5, 2 * t + 2, 2.0)}; };
  EXPECT_GE(test_power(gen, ref, cfg), 0.95);
}

TEST(TestPower, ConfigAndDeterminism) {
  TestConfig cfg;
  cfg.trials = 1;
  cfg.permutations = 100;
  const SampleSource gen = [](std::size_t t) { return SampleSet{normal_rows(40, 3, t + 1)}; };
  const SampleSource ref = [](std::size_t t) { return SampleSet{normal_rows(40, 3, t + 50, 0.2)}; };
  const double one = test_power(gen, ref, cfg);
  EXPECT_TRUE(one == 0.0 || one == 1.0);
  cfg.trials = 20;
  cfg.exec = Exec::serial;
  const double serial = test_power(gen, ref, cfg);
  cfg.exec = Exec::parallel;
  EXPECT_EQ(serial, test_power(gen, ref, cfg));
  cfg.trials = 0;
  EXPECT_THROW(test_power(gen, ref, cfg), InvalidArgument);
  cfg.trials = 5;
  cfg.permutations = 50;
  EXPECT_THROW(test_power(gen, ref, cfg), InvalidArgument);
}
