#include "pfode/schedule.hpp"

#include <cmath>
#include <string>

#include "pfode/errors.hpp"
#include "pfode/rng.hpp"

namespace pfode {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

NoiseSchedule::NoiseSchedule(Kind kind, double hi, double lo)
    : kind_(kind), logsnr_max_(hi), logsnr_min_(lo) {
  if (!std::isfinite(hi) || !std::isfinite(lo)) {
    throw InvalidArgument("noise schedule endpoints must be finite");
  }
  if (kind_ == Kind::cosine) {
    if (!(hi > lo)) throw InvalidArgument("noise schedule needs logsnr_max > logsnr_min");
    // lambda = -2 log tan(u)  <=>  u = atan(exp(-lambda / 2))
    offset_ = std::atan(std::exp(-0.5 * hi));
    slope_ = std::atan(std::exp(-0.5 * lo)) - offset_;
  }
}

NoiseSchedule NoiseSchedule::cosine(double logsnr_max, double logsnr_min) {
  return NoiseSchedule(Kind::cosine, logsnr_max, logsnr_min);
}

NoiseSchedule NoiseSchedule::constant(double logsnr) {
  return NoiseSchedule(Kind::constant, logsnr, logsnr);
}

void NoiseSchedule::check_time(double t, const char* what) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw OutOfRange(std::string(what) + ": t = " + std::to_string(t) + " outside [0, 1]");
  }
}

double NoiseSchedule::log_snr(double t) const {
  check_time(t, "log_snr");
  if (kind_ == Kind::constant) return logsnr_max_;
  if (t == 0.0) return logsnr_max_;
  if (t == 1.0) return logsnr_min_;
  return -2.0 * std::log(std::tan(slope_ * t + offset_));
}

double NoiseSchedule::log_snr_derivative(double t) const {
  check_time(t, "log_snr_derivative");
  if (kind_ == Kind::constant) return 0.0;
  return -4.0 * slope_ / std::sin(2.0 * (slope_ * t + offset_));
}

double NoiseSchedule::mean_factor(double t) const { return std::sqrt(sigmoid(log_snr(t))); }

double NoiseSchedule::noise_variance_factor(double t) const { return sigmoid(-log_snr(t)); }

double NoiseSchedule::alpha(double t) const {
  check_time(t, "alpha");
  return -log_snr_derivative(t) * sigmoid(-log_snr(t));
}

ModeMarginal vp_marginal(const NoiseSchedule& schedule, double t) {
  return {schedule.mean_factor(t), schedule.noise_variance_factor(t)};
}

Eigen::VectorXd perturb(const Eigen::VectorXd& x0, const Eigen::VectorXd& eigenvalues,
                        const NoiseSchedule& schedule, double t, std::uint64_t seed) {
  if (x0.size() != eigenvalues.size()) throw DimensionMismatch("perturb: length mismatch");
  const ModeMarginal mm = vp_marginal(schedule, t);
  Rng rng(derive_seed(seed, 0));
  std::normal_distribution<double> normal;
  Eigen::VectorXd out(x0.size());
  for (Eigen::Index n = 0; n < x0.size(); ++n) {
    out[n] = mm.mean_factor * x0[n] +
             std::sqrt(eigenvalues[n] * mm.noise_variance_factor) * normal(rng);
  }
  return out;
}

LinearModeSde LinearModeSde::variance_preserving(const NoiseSchedule& schedule) {
  return {[schedule](double t) { return -0.5 * schedule.alpha(t); },
          [schedule](double t) { return std::sqrt(schedule.alpha(t)); }};
}

MarginalStats marginal_stats_quadrature(const LinearModeSde& sde, double lambda, double t,
                                        std::size_t steps, MarginalStats initial) {
  if (steps < 10) throw InvalidArgument("marginal_stats_quadrature: steps must be >= 10");
  if (!(t >= 0.0)) throw OutOfRange("marginal_stats_quadrature: t must be >= 0");
  const double h = t / static_cast<double>(steps);

  // log E(s) = int_0^s b, and the variance integral int_0^t lambda sigma^2 / E^2.
  double log_e = 0.0;
  double b_prev = sde.drift(0.0);
  double sigma_prev = sde.diffusion(0.0);
  double g_prev = lambda * sigma_prev * sigma_prev;
  double var_integral = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double s = k == steps ? t : h * static_cast<double>(k);
    const double b = sde.drift(s);
    const double sigma = sde.diffusion(s);
    log_e += 0.5 * h * (b_prev + b);
    const double g = lambda * sigma * sigma * std::exp(-2.0 * log_e);
    if (!std::isfinite(b) || !std::isfinite(g) || !std::isfinite(log_e)) {
      throw QuadratureDivergence("marginal_stats_quadrature: non-finite integrand at s = " +
                                 std::to_string(s));
    }
    var_integral += 0.5 * h * (g_prev + g);
    b_prev = b;
    g_prev = g;
  }
  const double e = std::exp(log_e);
  return {initial.mean_factor * e, e * e * (initial.variance + var_integral)};
}

}  // namespace pfode
