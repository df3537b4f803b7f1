#include "pfode/mixture.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pfode/csv.hpp"
#include "pfode/errors.hpp"
#include "pfode/rng.hpp"

namespace pfode {

void MixtureDataSpec::validate() const {
  const Eigen::Index k = weights.size();
  if (k == 0) throw InvalidArgument("mixture: needs at least one component");
  if (means.rows() != k || variances.rows() != k || variances.cols() != means.cols()) {
    throw DimensionMismatch("mixture: weights, means and variances disagree in shape");
  }
  if ((weights.array() < 0.0).any()) throw InvalidArgument("mixture: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw InvalidArgument("mixture: weights must sum to 1");
  if ((variances.array() < 0.0).any()) throw InvalidArgument("mixture: negative variance");
  if (!means.allFinite() || !variances.allFinite()) throw InvalidArgument("mixture: non-finite entry");
}

MixtureDataSpec MixtureDataSpec::gaussian(const Eigen::VectorXd& mean,
                                          const Eigen::VectorXd& variance) {
  if (mean.size() != variance.size()) throw DimensionMismatch("gaussian spec: length mismatch");
  MixtureDataSpec s{Eigen::VectorXd::Ones(1), mean.transpose(), variance.transpose()};
  s.validate();
  return s;
}

MixtureDataSpec MixtureDataSpec::point_mass(const Eigen::VectorXd& x0) {
  return gaussian(x0, Eigen::VectorXd::Zero(x0.size()));
}

MixtureDataSpec MixtureDataSpec::stationary(const Eigen::VectorXd& eigenvalues) {
  return gaussian(Eigen::VectorXd::Zero(eigenvalues.size()), eigenvalues);
}

MixtureDataSpec quadratic_dataset_spec(const SpectralBasis& basis, double noise_variance) {
  if (!basis.grid() || basis.grid()->dim() != 1) {
    throw DimensionMismatch("quadratic_dataset_spec: needs a basis on a 1D grid");
  }
  if (!(noise_variance >= 0.0)) throw InvalidArgument("quadratic_dataset_spec: noise variance < 0");
  const Grid& g = *basis.grid();
  Eigen::VectorXd x2(static_cast<Eigen::Index>(g.points_per_axis()));
  for (Eigen::Index i = 0; i < x2.size(); ++i) {
    const double x = g.coordinate(0, static_cast<std::size_t>(i));
    x2[i] = x * x;
  }
  const Eigen::VectorXd c = to_coeffs(x2, basis);
  const auto m = static_cast<Eigen::Index>(basis.truncation());
  MixtureDataSpec s;
  s.weights = Eigen::VectorXd::Constant(2, 0.5);
  s.means.resize(2, m);
  s.means.row(0) = c.transpose();
  s.means.row(1) = -c.transpose();
  s.variances = Eigen::MatrixXd::Constant(2, m, noise_variance * basis.quadrature_weight());
  s.validate();
  return s;
}

namespace {

struct TimeFactors {
  double m;    // mean factor
  double m2;   // m^2 = sigmoid(logsnr)
  double nvf;  // 1 - m^2 = sigmoid(-logsnr)
};

TimeFactors time_factors(const NoiseSchedule& schedule, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw OutOfRange("score oracle: t = " + std::to_string(t) + " outside (0, 1]");
  }
  const double l = schedule.log_snr(t);
  const double m2 = sigmoid(l);
  return {std::sqrt(m2), m2, sigmoid(-l)};
}

// Stationary modes (c == lambda) keep variance exactly lambda.
inline double marginal_variance(double c, double lambda, const TimeFactors& f) {
  return c == lambda ? lambda : f.m2 * c + lambda * f.nvf;
}

constexpr double kLogTwoPi = 1.8378770664093454836;

}  // namespace

ModeDensityParams mode_density_params(const MixtureDataSpec& spec,
                                      const Eigen::VectorXd& eigenvalues,
                                      const NoiseSchedule& schedule, double t, std::size_t n) {
  if (n >= spec.modes() || static_cast<Eigen::Index>(spec.modes()) != eigenvalues.size()) {
    throw DimensionMismatch("mode_density_params: mode index or spectrum length mismatch");
  }
  const TimeFactors f = time_factors(schedule, t);
  const auto k = static_cast<Eigen::Index>(spec.components());
  const auto nn = static_cast<Eigen::Index>(n);
  ModeDensityParams p{spec.weights, Eigen::VectorXd(k), Eigen::VectorXd(k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    p.means[j] = f.m * spec.means(j, nn);
    p.variances[j] = marginal_variance(spec.variances(j, nn), eigenvalues[nn], f);
  }
  if ((p.variances.array() <= 0.0).all()) {
    throw DegenerateDensity("mode_density_params: every component variance is zero (mode " +
                            std::to_string(n) + ")");
  }
  return p;
}

namespace {

// Log-weights and per-component scores over components with positive variance.
template <typename F>
void for_live_components(const ModeDensityParams& p, double x, F&& f) {
  bool any = false;
  for (Eigen::Index j = 0; j < p.weights.size(); ++j) {
    const double v = p.variances[j];
    if (!(v > 0.0) || !(p.weights[j] > 0.0)) continue;
    any = true;
    const double d = x - p.means[j];
    f(std::log(p.weights[j]) - 0.5 * (kLogTwoPi + std::log(v)) - 0.5 * d * d / v, -d / v);
  }
  if (!any) throw DegenerateDensity("mode density has no component with positive variance");
}

}  // namespace

double mode_log_density(const ModeDensityParams& params, double x) {
  double top = -std::numeric_limits<double>::infinity();
  for_live_components(params, x, [&](double l, double) { top = std::max(top, l); });
  double acc = 0.0;
  for_live_components(params, x, [&](double l, double) { acc += std::exp(l - top); });
  return top + std::log(acc);
}

double mode_score(const ModeDensityParams& params, double x) {
  double top = -std::numeric_limits<double>::infinity();
  for_live_components(params, x, [&](double l, double) { top = std::max(top, l); });
  double num = 0.0;
  double den = 0.0;
  for_live_components(params, x, [&](double l, double s) {
    const double e = std::exp(l - top);
    num += e * s;
    den += e;
  });
  return num / den;
}

Eigen::VectorXd log_gradient(const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
                             const NoiseSchedule& schedule, double t, const Eigen::VectorXd& u) {
  const Eigen::Index m = eigenvalues.size();
  if (u.size() != m || static_cast<Eigen::Index>(spec.modes()) != m) {
    throw DimensionMismatch("log_gradient: coefficient length mismatch");
  }
  const TimeFactors f = time_factors(schedule, t);
  Eigen::VectorXd out(m);
  if (spec.components() == 1) {
    for (Eigen::Index n = 0; n < m; ++n) {
      const double lambda = eigenvalues[n];
      if (lambda == 0.0) {
        out[n] = 0.0;
        continue;
      }
      const double v = marginal_variance(spec.variances(0, n), lambda, f);
      if (!(v > 0.0)) throw DegenerateDensity("log_gradient: zero marginal variance");
      out[n] = -(u[n] - f.m * spec.means(0, n)) * (lambda / v);
    }
    return out;
  }
  for (Eigen::Index n = 0; n < m; ++n) {
    if (eigenvalues[n] == 0.0) {
      out[n] = 0.0;
      continue;
    }
    const ModeDensityParams p =
        mode_density_params(spec, eigenvalues, schedule, t, static_cast<std::size_t>(n));
    out[n] = eigenvalues[n] * mode_score(p, u[n]);
  }
  return out;
}

Eigen::VectorXd joint_log_gradient(const MixtureDataSpec& spec,
                                   const Eigen::VectorXd& eigenvalues,
                                   const NoiseSchedule& schedule, double t,
                                   const Eigen::VectorXd& u) {
  if (spec.components() == 1) return log_gradient(spec, eigenvalues, schedule, t, u);
  const Eigen::Index m = eigenvalues.size();
  if (u.size() != m || static_cast<Eigen::Index>(spec.modes()) != m) {
    throw DimensionMismatch("joint_log_gradient: coefficient length mismatch");
  }
  const TimeFactors f = time_factors(schedule, t);
  const auto k = static_cast<Eigen::Index>(spec.components());

  Eigen::VectorXd logr = Eigen::VectorXd::Constant(k, -std::numeric_limits<double>::infinity());
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(spec.weights[j] > 0.0)) continue;
    double l = std::log(spec.weights[j]);
    for (Eigen::Index n = 0; n < m; ++n) {
      if (eigenvalues[n] == 0.0) continue;
      const double v = marginal_variance(spec.variances(j, n), eigenvalues[n], f);
      if (!(v > 0.0)) throw DegenerateDensity("joint_log_gradient: zero marginal variance");
      const double d = u[n] - f.m * spec.means(j, n);
      l -= 0.5 * (kLogTwoPi + std::log(v)) + 0.5 * d * d / v;
    }
    logr[j] = l;
  }
  const double top = logr.maxCoeff();
  Eigen::VectorXd r = (logr.array() - top).exp();
  r /= r.sum();

  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  for (Eigen::Index n = 0; n < m; ++n) {
    const double lambda = eigenvalues[n];
    if (lambda == 0.0) continue;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (r[j] == 0.0) continue;
      const double v = marginal_variance(spec.variances(j, n), lambda, f);
      acc += r[j] * (-(u[n] - f.m * spec.means(j, n)) / v);
    }
    out[n] = lambda * acc;
  }
  return out;
}

Eigen::VectorXd conditional_log_gradient(const Eigen::VectorXd& x0,
                                         const NoiseSchedule& schedule, double t,
                                         const Eigen::VectorXd& xt) {
  if (!(t > 0.0 && t < 1.0)) {
    throw OutOfRange("conditional_log_gradient: t = " + std::to_string(t) + " outside (0, 1)");
  }
  if (x0.size() != xt.size()) throw DimensionMismatch("conditional_log_gradient: length mismatch");
  const TimeFactors f = time_factors(schedule, t);
  return -(xt - f.m * x0) / f.nvf;
}

Eigen::VectorXd draw_mixture(const MixtureDataSpec& spec, const Eigen::MatrixXd& sd, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal;
  const auto k = static_cast<Eigen::Index>(spec.components());
  const double pick = uniform(rng);
  Eigen::Index comp = k - 1;
  double cum = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cum += spec.weights[j];
    if (pick < cum) {
      comp = j;
      break;
    }
  }
  Eigen::VectorXd x(spec.means.cols());
  for (Eigen::Index n = 0; n < x.size(); ++n) x[n] = spec.means(comp, n) + sd(comp, n) * normal(rng);
  return x;
}

Eigen::MatrixXd sample_mixture(const MixtureDataSpec& spec, std::size_t count,
                               std::uint64_t seed) {
  spec.validate();
  const Eigen::MatrixXd sd = spec.variances.cwiseSqrt();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), spec.means.cols());
  const std::uint64_t stream = derive_seed(seed, kDataStream);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = substream(stream, i);
    out.row(static_cast<Eigen::Index>(i)) = draw_mixture(spec, sd, rng).transpose();
  }
  return out;
}

void write_mixture_csv(std::ostream& os, const MixtureDataSpec& spec) {
  csv::write_row(os, {"component", "weight"});
  for (Eigen::Index j = 0; j < spec.weights.size(); ++j) {
    csv::write_row(os, {std::to_string(j), csv::format(spec.weights[j])});
  }
  os << '\n';
  csv::write_row(os, {"component", "mode", "mean", "variance"});
  for (Eigen::Index j = 0; j < spec.means.rows(); ++j)
    for (Eigen::Index n = 0; n < spec.means.cols(); ++n)
      csv::write_row(os, {std::to_string(j), std::to_string(n), csv::format(spec.means(j, n)),
                          csv::format(spec.variances(j, n))});
}

MixtureDataSpec read_mixture_csv(std::istream& is) {
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto split = text.find("\n\n");
  if (split == std::string::npos) throw InvalidArgument("mixture csv: expected two blocks");
  std::istringstream first(text.substr(0, split + 1));
  std::istringstream second(text.substr(split + 2));
  const csv::Table w = csv::read(first);
  const csv::Table modes = csv::read(second);
  const std::size_t wc = w.column("weight");
  const std::size_t cc = modes.column("component");
  const std::size_t nc = modes.column("mode");
  const std::size_t mc = modes.column("mean");
  const std::size_t vc = modes.column("variance");

  const auto k = static_cast<Eigen::Index>(w.rows.size());
  Eigen::Index m = 0;
  for (const auto& r : modes.rows) m = std::max<Eigen::Index>(m, std::stol(r[nc]) + 1);
  MixtureDataSpec s{Eigen::VectorXd(k), Eigen::MatrixXd::Zero(k, m), Eigen::MatrixXd::Zero(k, m)};
  for (Eigen::Index j = 0; j < k; ++j) s.weights[j] = std::stod(w.rows[static_cast<std::size_t>(j)][wc]);
  for (const auto& r : modes.rows) {
    const Eigen::Index j = std::stol(r[cc]);
    const Eigen::Index n = std::stol(r[nc]);
    if (j < 0 || j >= k) throw InvalidArgument("mixture csv: component index out of range");
    s.means(j, n) = std::stod(r[mc]);
    s.variances(j, n) = std::stod(r[vc]);
  }
  s.validate();
  return s;
}

}  // namespace pfode
