#include "pfode/samplers.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "pfode/errors.hpp"
#include "pfode/kernels.hpp"
#include "pfode/rng.hpp"

namespace pfode {

const char* method_name(Method m) { return m == Method::ode ? "ode" : "sde"; }

Method parse_method(const std::string& name) {
  if (name == "ode" || name == "ODE") return Method::ode;
  if (name == "sde" || name == "SDE") return Method::sde;
  throw InvalidArgument("unknown sampler method '" + name + "'");
}

void SamplerConfig::validate() const {
  if (nfe < 1) throw InvalidArgument("sampler: nfe must be >= 1");
  if (!(t_eps > 0.0 && t_eps < 1.0)) throw InvalidArgument("sampler: t_eps must be in (0, 1)");
  if (!(diffusion_scale >= 0.0)) throw InvalidArgument("sampler: diffusion_scale must be >= 0");
  if (!(score_weight >= 0.0)) throw InvalidArgument("sampler: score_weight must be >= 0");
}

double step_size(const SamplerConfig& cfg) {
  return (1.0 - cfg.t_eps) / static_cast<double>(cfg.nfe);
}

namespace {

Eigen::VectorXd leading_eigenvalues(const Eigen::VectorXd& eigenvalues, const SamplerConfig& cfg) {
  const auto available = static_cast<std::size_t>(eigenvalues.size());
  const std::size_t m = cfg.truncation == 0 ? available : cfg.truncation;
  if (m > available) {
    throw InvalidArgument("sampler: truncation " + std::to_string(m) + " exceeds basis size " +
                          std::to_string(available));
  }
  return eigenvalues.head(static_cast<Eigen::Index>(m));
}

// Shared Euler(-Maruyama) loop. The ODE and SDE differ only in the score
// weight and in whether path noise is added.
SamplerOutput integrate(const ScoreFn& score, const Eigen::VectorXd& lambda,
                        const NoiseSchedule& schedule, const SamplerConfig& cfg,
                        const Eigen::MatrixXd& y0, double weight, double noise_scale) {
  const double h = step_size(cfg);
  const Eigen::VectorXd noise_sd = lambda.cwiseSqrt();
  const std::uint64_t noise_stream = derive_seed(cfg.seed, kPathNoiseStream);
  const Eigen::Index m = lambda.size();

  SamplerOutput out{y0, 0};
  std::atomic<std::size_t> evaluations{0};
  kernels::for_each_index(cfg.count, cfg.exec, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::VectorXd y = y0.row(row).transpose();
    Rng rng = substream(noise_stream, i);
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < cfg.nfe; ++k) {
      const double t = 1.0 - static_cast<double>(k) * h;
      const double a = schedule.alpha(t);
      const Eigen::VectorXd rho = score(t, y);
      evaluations.fetch_add(1, std::memory_order_relaxed);
      if (rho.size() != m) throw DimensionMismatch("sampler: score returned wrong length");
      y += h * (0.5 * a * y + weight * a * rho);
      if (noise_scale > 0.0) {
        const double s = noise_scale * std::sqrt(a * h);
        for (Eigen::Index n = 0; n < m; ++n) y[n] += s * noise_sd[n] * normal(rng);
      }
      if (!y.allFinite()) {
        throw NonFiniteState("sampler: non-finite state on path " + std::to_string(i) +
                             " at t = " + std::to_string(t));
      }
    }
    out.coeffs.row(row) = y.transpose();
  });
  out.score_evaluations = evaluations.load();
  return out;
}

SamplerOutput run(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                  const NoiseSchedule& schedule, const SamplerConfig& cfg, Method method) {
  cfg.validate();
  const Eigen::VectorXd lambda = leading_eigenvalues(eigenvalues, cfg);
  const Eigen::MatrixXd y0 = sample_prior_coeffs(lambda, cfg.count, cfg.seed);
  const bool ode = method == Method::ode;
  const double weight = cfg.score_weight > 0.0 ? cfg.score_weight : (ode ? 0.5 : 1.0);
  const double noise = ode ? 0.0 : cfg.diffusion_scale;
  return integrate(score, lambda, schedule, cfg, y0, weight, noise);
}

}  // namespace

SamplerOutput pf_ode_sample(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                            const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  if (cfg.method != Method::ode) throw InvalidArgument("pf_ode_sample: method must be ODE");
  return run(score, eigenvalues, schedule, cfg, Method::ode);
}

SamplerOutput reverse_sde_sample(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                                 const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  if (cfg.method != Method::sde) throw InvalidArgument("reverse_sde_sample: method must be SDE");
  return run(score, eigenvalues, schedule, cfg, Method::sde);
}

SamplerOutput sample(const ScoreFn& score, const Eigen::VectorXd& eigenvalues,
                     const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  return run(score, eigenvalues, schedule, cfg, cfg.method);
}

std::pair<SamplerOutput, SamplerOutput> paired_sample(const ScoreFn& score,
                                                      const Eigen::VectorXd& eigenvalues,
                                                      const NoiseSchedule& schedule,
                                                      const SamplerConfig& cfg) {
  SamplerConfig ode = cfg;
  ode.method = Method::ode;
  SamplerConfig sde = cfg;
  sde.method = Method::sde;
  return {run(score, eigenvalues, schedule, ode, Method::ode),
          run(score, eigenvalues, schedule, sde, Method::sde)};
}

SamplerOutput pf_ode_sample(const ScoreFn& score, const SpectralBasis& basis,
                            const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  return pf_ode_sample(score, basis.eigenvalues(), schedule, cfg);
}

SamplerOutput reverse_sde_sample(const ScoreFn& score, const SpectralBasis& basis,
                                 const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  return reverse_sde_sample(score, basis.eigenvalues(), schedule, cfg);
}

SamplerOutput sample(const ScoreFn& score, const SpectralBasis& basis,
                     const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  return sample(score, basis.eigenvalues(), schedule, cfg);
}

std::pair<SamplerOutput, SamplerOutput> paired_sample(const ScoreFn& score,
                                                      const SpectralBasis& basis,
                                                      const NoiseSchedule& schedule,
                                                      const SamplerConfig& cfg) {
  return paired_sample(score, basis.eigenvalues(), schedule, cfg);
}

Eigen::VectorXd exact_gaussian_transport(const MixtureDataSpec& spec,
                                         const Eigen::VectorXd& eigenvalues,
                                         const NoiseSchedule& schedule,
                                         const Eigen::VectorXd& y0, double t_target) {
  if (spec.components() != 1) {
    throw InvalidArgument("exact_gaussian_transport: needs a single-component spec");
  }
  const Eigen::Index m = eigenvalues.size();
  if (y0.size() != m || static_cast<Eigen::Index>(spec.modes()) != m) {
    throw DimensionMismatch("exact_gaussian_transport: length mismatch");
  }
  const double l1 = schedule.log_snr(1.0);
  const double lt = schedule.log_snr(t_target);
  const double m1 = std::sqrt(sigmoid(l1));
  const double mt = std::sqrt(sigmoid(lt));
  Eigen::VectorXd out(m);
  for (Eigen::Index n = 0; n < m; ++n) {
    const double lambda = eigenvalues[n];
    const double c = spec.variances(0, n);
    const double mu = spec.means(0, n);
    if (c == lambda) {
      out[n] = mt * mu + (y0[n] - m1 * mu);
      continue;
    }
    const double v1 = sigmoid(l1) * c + lambda * sigmoid(-l1);
    const double vt = sigmoid(lt) * c + lambda * sigmoid(-lt);
    out[n] = mt * mu + std::sqrt(vt / v1) * (y0[n] - m1 * mu);
  }
  return out;
}

ScoreFn stationary_score() {
  return [](double, const Eigen::VectorXd& u) -> Eigen::VectorXd { return -u; };
}

ScoreFn zero_score() {
  return [](double, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return Eigen::VectorXd::Zero(u.size());
  };
}

ScoreFn oracle_score(MixtureDataSpec spec, Eigen::VectorXd eigenvalues, NoiseSchedule schedule) {
  spec.validate();
  return [spec = std::move(spec), lambda = std::move(eigenvalues), schedule](
             double t, const Eigen::VectorXd& u) {
    return joint_log_gradient(spec, lambda, schedule, t, u);
  };
}

ScoreFn per_mode_oracle_score(MixtureDataSpec spec, Eigen::VectorXd eigenvalues,
                              NoiseSchedule schedule) {
  spec.validate();
  return [spec = std::move(spec), lambda = std::move(eigenvalues), schedule](
             double t, const Eigen::VectorXd& u) {
    return log_gradient(spec, lambda, schedule, t, u);
  };
}

}  // namespace pfode
