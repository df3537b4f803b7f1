#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pfode/kernels.hpp"

using namespace pfode;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace

TEST(Kernels, RbfGramSerialAndParallelAgreeBitwise) {
  const auto x = random_values(257, 1);
  Eigen::MatrixXd a, b;
  kernels::rbf_gram(x, 1.3, 0.7, a, Exec::serial);
  kernels::rbf_gram(x, 1.3, 0.7, b, Exec::parallel);
  EXPECT_EQ(a, b);
  EXPECT_DOUBLE_EQ(a(3, 3), 1.3);
  EXPECT_DOUBLE_EQ(a(2, 5), 1.3 * std::exp(-(x[2] - x[5]) * (x[2] - x[5]) / 0.49));
  EXPECT_EQ(a, a.transpose());
}

TEST(Kernels, HeatStepSerialAndParallelAgreeBitwise) {
  const std::size_t n = 65;
  const auto in = random_values(n * n, 2);
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    std::vector<double> a(n * n), b(n * n);
    kernels::heat_step(in, a, n, 0.2, 0.2, bc, Exec::serial);
    kernels::heat_step(in, b, n, 0.2, 0.2, bc, Exec::parallel);
    EXPECT_EQ(a, b);
  }
}

TEST(Kernels, HeatStepDirichletZeroesBoundaryAndMatchesStencil) {
  const std::size_t n = 6;
  const auto in = random_values(n * n, 3);
  std::vector<double> out(n * n);
  kernels::serial::heat_step(in, out, n, 0.1, 0.15, BoundaryCondition::dirichlet);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_EQ(out[k], 0.0);
    EXPECT_EQ(out[(n - 1) * n + k], 0.0);
    EXPECT_EQ(out[k * n], 0.0);
    EXPECT_EQ(out[k * n + n - 1], 0.0);
  }
  const std::size_t i = 2, j = 3, c = i * n + j;
  const double expect = in[c] + 0.1 * (in[c + n] - 2 * in[c] + in[c - n]) +
                        0.15 * (in[c + 1] - 2 * in[c] + in[c - 1]);
  EXPECT_NEAR(out[c], expect, 1e-15);
}

TEST(Kernels, HeatStepNeumannConservesMassOfConstant) {
  const std::size_t n = 9;
  std::vector<double> in(n * n, 2.5), out(n * n);
  kernels::heat_step(in, out, n, 0.2, 0.2, BoundaryCondition::neumann, Exec::parallel);
  for (double v : out) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(Kernels, SqExpGramSerialAndParallelAgreeBitwise) {
  Eigen::MatrixXd x(150, 7);
  const auto v = random_values(150 * 7, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = v[static_cast<std::size_t>(i)];
  Eigen::MatrixXd a, b;
  kernels::sq_exp_gram(x, 1.7, a, Exec::serial);
  kernels::sq_exp_gram(x, 1.7, b, Exec::parallel);
  EXPECT_EQ(a, b);
  const double d2 = (x.row(4) - x.row(9)).squaredNorm();
  EXPECT_NEAR(a(4, 9), std::exp(-d2 / (2 * 1.7 * 1.7)), 1e-15);
  EXPECT_DOUBLE_EQ(a(7, 7), 1.0);
}

TEST(Kernels, ForEachIndexVisitsEverySlotOnce) {
  std::vector<int> hits(1000, 0);
  kernels::for_each_index(hits.size(), Exec::parallel, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Kernels, ForEachIndexPropagatesExceptions) {
  EXPECT_THROW(kernels::for_each_index(64, Exec::parallel,
                                       [](std::size_t i) {
                                         if (i == 17) throw std::runtime_error("boom");
                                       }),
               std::runtime_error);
}
