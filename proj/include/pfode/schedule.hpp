#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace pfode {

/// Log signal-to-noise schedule on t in [0, 1].
///
/// The cosine kind is lambda(t) = -2 log tan(a t + b) with a, b fitted so
/// that lambda(0) = logsnr_max and lambda(1) = logsnr_min. The constant kind
/// holds lambda fixed and exists as a degenerate test double (alpha == 0).
class NoiseSchedule {
 public:
  enum class Kind { cosine, constant };

  static NoiseSchedule cosine(double logsnr_max = 10.0, double logsnr_min = -10.0);
  static NoiseSchedule constant(double logsnr);

  Kind kind() const { return kind_; }
  double logsnr_max() const { return logsnr_max_; }
  double logsnr_min() const { return logsnr_min_; }

  double log_snr(double t) const;
  double log_snr_derivative(double t) const;
  /// m(t) = sqrt(sigmoid(lambda(t))).
  double mean_factor(double t) const;
  /// 1 - m(t)^2, evaluated as sigmoid(-lambda(t)) to keep precision near t = 0.
  double noise_variance_factor(double t) const;
  /// alpha(t) = -d/dt 2 log m(t) = -lambda'(t) sigmoid(-lambda(t)).
  double alpha(double t) const;

 private:
  NoiseSchedule(Kind kind, double hi, double lo);
  void check_time(double t, const char* what) const;

  Kind kind_;
  double logsnr_max_;
  double logsnr_min_;
  double slope_ = 0.0;   // a
  double offset_ = 0.0;  // b
};

/// Closed-form per-mode VP marginal: X_t^n | X_0^n ~ N(m x0, lambda_n (1 - m^2)).
struct ModeMarginal {
  double mean_factor;
  double noise_variance_factor;
};

ModeMarginal vp_marginal(const NoiseSchedule& schedule, double t);

double sigmoid(double x);

/// Per-mode perturbation: out[n] ~ N(m(t) x0[n], lambda_n (1 - m(t)^2)).
Eigen::VectorXd perturb(const Eigen::VectorXd& x0, const Eigen::VectorXd& eigenvalues,
                        const NoiseSchedule& schedule, double t, std::uint64_t seed);

/// Scalar linear SDE dX = b(t) X dt + sqrt(lambda) sigma(t) dB for one mode.
struct LinearModeSde {
  std::function<double(double)> drift;      // b_n(t)
  std::function<double(double)> diffusion;  // sigma_n(t) >= 0

  static LinearModeSde variance_preserving(const NoiseSchedule& schedule);
};

struct MarginalStats {
  double mean_factor;
  double variance;
};

/// Mean factor and variance of X_t given X_0 = x0 by trapezoid quadrature on
/// `steps` uniform intervals of [0, t]. `initial` gives the state at t = 0 as
/// (mean factor, variance): X_0 = initial.mean_factor * x0 + N(0, initial.variance).
MarginalStats marginal_stats_quadrature(const LinearModeSde& sde, double lambda, double t,
                                        std::size_t steps,
                                        MarginalStats initial = {1.0, 0.0});

}  // namespace pfode
