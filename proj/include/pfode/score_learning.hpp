#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>

#include "pfode/exec.hpp"
#include "pfode/mixture.hpp"
#include "pfode/samplers.hpp"
#include "pfode/schedule.hpp"

namespace pfode {

/// Piecewise-constant-in-time, affine-per-mode score model:
/// S(t, u)_n = slope(b, n) u_n + intercept(b, n) for t in bin b.
class AffineScoreModel {
 public:
  AffineScoreModel(Eigen::VectorXd edges, Eigen::MatrixXd slope, Eigen::MatrixXd intercept);

  /// B bins of equal width on [t_min, t_max], all coefficients zero.
  static AffineScoreModel zeros(std::size_t bins, std::size_t modes, double t_min = 1e-3,
                                double t_max = 1.0);

  const Eigen::VectorXd& edges() const { return edges_; }
  const Eigen::MatrixXd& slope() const { return slope_; }
  const Eigen::MatrixXd& intercept() const { return intercept_; }
  std::size_t bins() const { return static_cast<std::size_t>(slope_.rows()); }
  std::size_t modes() const { return static_cast<std::size_t>(slope_.cols()); }

  /// Bins are right-closed, (e_b, e_{b+1}]; the first bin also holds e_0.
  std::size_t bin_of(double t) const;
  Eigen::VectorXd evaluate(double t, const Eigen::VectorXd& u) const;
  ScoreFn as_score() const;

 private:
  Eigen::VectorXd edges_;
  Eigen::MatrixXd slope_;
  Eigen::MatrixXd intercept_;
};

struct TrainingConfig {
  std::size_t samples_per_bin = 50000;
  double ridge = 1e-8;
  std::uint64_t seed = 0;
  std::size_t bins = 32;
  double t_min = 1e-3;
  /// Pair every noise draw with its negation (same X0 and t). The DSM loss
  /// keeps its expectation; the cross term between X0 and the noise, which
  /// dominates the variance at small t, cancels within each pair.
  bool antithetic = true;
  Exec exec = Exec::parallel;

  void validate() const;
};

/// Rows of (X_t, conditional score target) at a fixed time.
struct DsmBatch {
  Eigen::MatrixXd xt;
  Eigen::MatrixXd target;
};

DsmBatch dsm_targets(const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
                     const NoiseSchedule& schedule, double t, std::size_t count,
                     std::uint64_t seed);

/// Per (bin, mode) ridge least squares of the target on (u_n, 1), with t
/// drawn uniformly inside each bin.
AffineScoreModel fit(const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
                     const NoiseSchedule& schedule, const TrainingConfig& cfg);

/// Mean squared coefficient-space error of the model on a batch at time t.
double dsm_loss(const AffineScoreModel& model, double t, const DsmBatch& batch);

/// Closed-form affine score of single-component Gaussian data at time t:
/// slope -lambda/v, intercept lambda m mu / v. Returns {slope, intercept}.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gaussian_score_coefficients(
    const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
    const NoiseSchedule& schedule, double t);

/// First line `bin_edges,e_0,...,e_B`, then `bin,mode,slope,intercept`.
void write_model_csv(std::ostream& os, const AffineScoreModel& model);
AffineScoreModel read_model_csv(std::istream& is);

}  // namespace pfode
