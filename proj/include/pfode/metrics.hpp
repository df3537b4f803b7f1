#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "pfode/exec.hpp"

namespace pfode {

/// Sample rows (grid values or coefficients). `weight` is the quadrature
/// weight of the inner product used by FPCA (1 for coefficient rows).
struct SampleSet {
  Eigen::MatrixXd samples;
  double weight = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
  void validate() const;
};

/// Exact W2 between two 1D empirical measures with uniform weights, via
/// their quantile functions. Sorts copies of the inputs.
double wasserstein2_1d(Eigen::VectorXd a, Eigen::VectorXd b);

/// Unit directions as rows, from normalized Gaussian draws.
Eigen::MatrixXd random_directions(std::size_t count, std::size_t dim, std::uint64_t seed);

/// Mean over projections of the projected 1D W2 distance.
double sliced_wasserstein(const SampleSet& a, const SampleSet& b, std::size_t n_projections,
                          std::uint64_t seed, Exec exec = Exec::parallel);

struct FpcaResult {
  Eigen::MatrixXd scores;      // n x r
  Eigen::MatrixXd components;  // dim x r, orthonormal under the weighted inner product
  Eigen::VectorXd explained;   // variance per component, nonincreasing
  Eigen::RowVectorXd mean;
};

FpcaResult fpca_scores(const SampleSet& pooled, std::size_t r);

/// Median of the pairwise Euclidean distances between rows.
double median_pairwise_distance(const Eigen::MatrixXd& x);

/// Unbiased MMD^2 with kernel exp(-|x - y|^2 / (2 h^2)). Without a bandwidth
/// the median heuristic on the pooled rows is used.
double mmd2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
            std::optional<double> bandwidth = std::nullopt, Exec exec = Exec::parallel);
/// Biased (V-statistic) variant; exactly 0 for identical multisets.
double mmd2_biased(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                   std::optional<double> bandwidth = std::nullopt, Exec exec = Exec::parallel);

struct TestConfig {
  double level = 0.05;
  std::size_t permutations = 500;
  std::size_t trials = 100;
  std::size_t fpca_components = 10;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct PermutationTest {
  double statistic;
  double p_value;
  bool reject;
};

/// FPCA on the pooled sets, then a permutation test of unbiased MMD^2 on the
/// scores. p = (1 + #{perm >= observed}) / (1 + permutations).
PermutationTest fpca_mmd_test(const SampleSet& a, const SampleSet& b, const TestConfig& cfg,
                              std::uint64_t seed);

/// Draws a sample set for trial `trial`; must be deterministic in its arguments.
using SampleSource = std::function<SampleSet(std::size_t trial)>;

/// Fraction of trials that reject at cfg.level.
double test_power(const SampleSource& gen, const SampleSource& ref, const TestConfig& cfg);

}  // namespace pfode
