#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

#include "pfode/rng.hpp"
#include "pfode/schedule.hpp"
#include "pfode/spectral.hpp"

namespace pfode {

/// Data law P0 as a mixture of K Gaussians that are diagonal in the
/// Q-eigenbasis: component k has per-mode means means(k, n) and variances
/// variances(k, n).
struct MixtureDataSpec {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd variances;

  std::size_t components() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t modes() const { return static_cast<std::size_t>(means.cols()); }
  void validate() const;

  static MixtureDataSpec gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance);
  static MixtureDataSpec point_mass(const Eigen::VectorXd& x0);
  /// N(0, Q) itself: zero mean, variances equal to the eigenvalues.
  static MixtureDataSpec stationary(const Eigen::VectorXd& eigenvalues);
};

/// f(x) = a x^2 + eps with a ~ Unif{-1, 1} and eps i.i.d. N(0, noise_variance)
/// per grid point, projected onto the basis. Projected white noise has
/// per-mode variance noise_variance * w for a w-orthonormal basis.
MixtureDataSpec quadratic_dataset_spec(const SpectralBasis& basis, double noise_variance);

/// Law of the n-th coordinate of X_t: a 1D Gaussian mixture.
struct ModeDensityParams {
  Eigen::VectorXd weights;
  Eigen::VectorXd means;
  Eigen::VectorXd variances;
};

ModeDensityParams mode_density_params(const MixtureDataSpec& spec,
                                      const Eigen::VectorXd& eigenvalues,
                                      const NoiseSchedule& schedule, double t, std::size_t n);

double mode_log_density(const ModeDensityParams& params, double x);
/// d/dx log p(x), log-sum-exp stabilized.
double mode_score(const ModeDensityParams& params, double x);

/// Logarithmic gradient in coefficient form built coordinate by coordinate:
/// out[n] = lambda_n * d/du_n log p_t^(n)(u_n). Exact when P0 is a product
/// measure over modes (any K = 1 spec).
Eigen::VectorXd log_gradient(const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
                             const NoiseSchedule& schedule, double t, const Eigen::VectorXd& u);

/// Logarithmic gradient of the full mixture: component responsibilities are
/// computed jointly across modes, then out[n] = lambda_n * sum_k r_k(u) *
/// (-(u_n - m mu_kn) / v_kn). Equals `log_gradient` for K = 1.
Eigen::VectorXd joint_log_gradient(const MixtureDataSpec& spec,
                                   const Eigen::VectorXd& eigenvalues,
                                   const NoiseSchedule& schedule, double t,
                                   const Eigen::VectorXd& u);

/// Score of the perturbation kernel mu_{t | X0}: -(xt - m x0) / (1 - m^2).
Eigen::VectorXd conditional_log_gradient(const Eigen::VectorXd& x0,
                                         const NoiseSchedule& schedule, double t,
                                         const Eigen::VectorXd& xt);

/// One draw from the mixture; `sd` holds the elementwise sqrt of variances.
Eigen::VectorXd draw_mixture(const MixtureDataSpec& spec, const Eigen::MatrixXd& sd, Rng& rng);

/// Rows are i.i.d. draws from the mixture; row i uses its own substream.
Eigen::MatrixXd sample_mixture(const MixtureDataSpec& spec, std::size_t count,
                               std::uint64_t seed);

/// Two CSV blocks: `component,weight` then `component,mode,mean,variance`.
void write_mixture_csv(std::ostream& os, const MixtureDataSpec& spec);
MixtureDataSpec read_mixture_csv(std::istream& is);

}  // namespace pfode
