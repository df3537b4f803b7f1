#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "pfode/exec.hpp"
#include "pfode/mixture.hpp"
#include "pfode/schedule.hpp"
#include "pfode/spectral.hpp"

namespace pfode {

/// (t, u) -> rho(t, u): the logarithmic gradient in coefficient form, i.e.
/// lambda_n-weighted per-mode scores. Must be safe to call concurrently.
using ScoreFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

enum class Method { ode, sde };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct SamplerConfig {
  std::size_t nfe = 100;
  Method method = Method::ode;
  double t_eps = 1e-3;
  /// Number of leading modes to evolve; 0 keeps every mode of the basis.
  std::size_t truncation = 0;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  Exec exec = Exec::parallel;

  // Test hooks. The ODE is the SDE with diffusion 0 and score weight 1/2.
  double diffusion_scale = 1.0;
  double score_weight = 0.0;  // 0 selects the method default (1/2 ODE, 1 SDE)

  void validate() const;
};

struct SamplerOutput {
  Eigen::MatrixXd coeffs;            // count x M, values at t = t_eps
  std::size_t score_evaluations = 0;
};

/// Euler steps of dY/ds = alpha(1 - s)/2 * (Y + rho(1 - s, Y)) from
/// Y(0) ~ N(0, Q) over s in [0, 1 - t_eps].
SamplerOutput pf_ode_sample(const ScoreFn& score, const SpectralBasis& basis,
                            const NoiseSchedule& schedule, const SamplerConfig& cfg);

/// Euler-Maruyama for dY = (alpha/2 Y + alpha rho) ds + sqrt(alpha lambda_n) dB.
SamplerOutput reverse_sde_sample(const ScoreFn& score, const SpectralBasis& basis,
                                 const NoiseSchedule& schedule, const SamplerConfig& cfg);

/// Overloads on a bare spectrum, for generators whose eigenfunctions are not
/// stored as a dense matrix.
SamplerOutput pf_ode_sample(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                            const NoiseSchedule& schedule, const SamplerConfig& cfg);
SamplerOutput reverse_sde_sample(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                                 const NoiseSchedule& schedule, const SamplerConfig& cfg);

/// Dispatches on cfg.method.
SamplerOutput sample(const ScoreFn& score, const SpectralBasis& basis,
                     const NoiseSchedule& schedule, const SamplerConfig& cfg);
SamplerOutput sample(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                     const NoiseSchedule& schedule, const SamplerConfig& cfg);

/// ODE and SDE runs sharing the initial draws; `cfg.method` is ignored.
std::pair<SamplerOutput, SamplerOutput> paired_sample(const ScoreFn& score,
                                                      const SpectralBasis& basis,
                                                      const NoiseSchedule& schedule,
                                                      const SamplerConfig& cfg);
std::pair<SamplerOutput, SamplerOutput> paired_sample(const ScoreFn& score,
                                                      const Eigen::VectorXd& eigenvalues,
                                                      const NoiseSchedule& schedule,
                                                      const SamplerConfig& cfg);

/// The reverse time grid: t_k = 1 - k h, h = (1 - t_eps) / nfe, k < nfe.
double step_size(const SamplerConfig& cfg);

/// Closed-form PF-ODE flow for single-component Gaussian data, from t = 1 to
/// t_target. Along the flow z_n = (Y_n - m mu_n) / sqrt(v_n) is constant, so
/// Y_n(t) = m(t) mu_n + sqrt(v_n(t) / v_n(1)) (y0_n - m(1) mu_n).
Eigen::VectorXd exact_gaussian_transport(const MixtureDataSpec& spec,
                                         const Eigen::VectorXd& eigenvalues,
                                         const NoiseSchedule& schedule,
                                         const Eigen::VectorXd& y0, double t_target);

// Score adaptors.
ScoreFn stationary_score();
ScoreFn zero_score();
/// Uses joint_log_gradient (which reduces to log_gradient for K = 1).
ScoreFn oracle_score(MixtureDataSpec spec, Eigen::VectorXd eigenvalues, NoiseSchedule schedule);
/// Uses the mode-by-mode log_gradient even for K > 1.
ScoreFn per_mode_oracle_score(MixtureDataSpec spec, Eigen::VectorXd eigenvalues,
                              NoiseSchedule schedule);

}  // namespace pfode
