// Acceptance gate: one PASS/FAIL line per primary criterion, each with its
// measured quantities and wall time. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pfode/experiments.hpp"
#include "pfode/heat.hpp"
#include "pfode/metrics.hpp"
#include "pfode/mixture.hpp"
#include "pfode/rng.hpp"
#include "pfode/samplers.hpp"
#include "pfode/schedule.hpp"
#include "pfode/score_learning.hpp"
#include "pfode/spectral.hpp"

using namespace pfode;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Criterion {
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SpectralBasis quadratic_basis(std::size_t m) {
  return rbf_basis(Grid::line(100, {-10.0, 10.0}), RbfKernelSpec{}, m);
}

// Stationary fixed point: N(0, Q) data with its exact score leaves every
// ODE step increment at exactly zero.
Outcome stationary_fixed_point() {
  const SpectralBasis basis = quadratic_basis(32);
  const NoiseSchedule schedule = NoiseSchedule::cosine();
  const ScoreFn score =
      oracle_score(MixtureDataSpec::stationary(basis.eigenvalues()), basis.eigenvalues(), schedule);
  double worst = 0.0;
  for (std::size_t nfe : {1, 10, 100}) {
    SamplerConfig cfg;
    cfg.nfe = nfe;
    cfg.count = 1000;
    cfg.seed = 11;
    const SamplerOutput out = pf_ode_sample(score, basis, schedule, cfg);
    const Eigen::MatrixXd y0 = sample_prior_coeffs(basis.eigenvalues(), cfg.count, cfg.seed);
    worst = std::max(worst, (out.coeffs - y0).cwiseAbs().maxCoeff());
  }
  return {worst == 0.0, "max|Y - Y0| over NFE {1,10,100}, 1000 paths, M=32: " + fmt("%.3g", worst)};
}

// Per-mode mean and variance of 1e4 paths at NFE 4096 against the analytic
// marginal at t_eps, within 3 standard errors.
Outcome marginal_agreement() {
  const SpectralBasis basis = quadratic_basis(4);
  const NoiseSchedule schedule = NoiseSchedule::cosine();
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const MixtureDataSpec spec = gaussian_sanity_spec(lambda, 1.0, 0.5);
  const ScoreFn score = oracle_score(spec, lambda, schedule);
  SamplerConfig cfg;
  cfg.nfe = 4096;
  cfg.count = 10000;
  cfg.seed = 3;
  const auto [ode, sde] = paired_sample(score, basis, schedule, cfg);

  bool pass = true;
  double worst = 0.0;
  for (const auto* out : {&ode, &sde}) {
    for (Eigen::Index n = 0; n < lambda.size(); ++n) {
      const ModeDensityParams p = mode_density_params(spec, lambda, schedule, cfg.t_eps,
                                                      static_cast<std::size_t>(n));
      const Eigen::VectorXd x = out->coeffs.col(n);
      const double count = static_cast<double>(x.size());
      const double mean = x.mean();
      const double var = (x.array() - mean).square().sum() / (count - 1.0);
      const double z_mean = std::abs(mean - p.means[0]) / std::sqrt(p.variances[0] / count);
      const double z_var =
          std::abs(var - p.variances[0]) / (p.variances[0] * std::sqrt(2.0 / (count - 1.0)));
      worst = std::max({worst, z_mean, z_var});
      pass = pass && z_mean <= 3.0 && z_var <= 3.0;
    }
  }
  return {pass, "largest |error| in standard errors over 4 modes x {mean,var} x {ODE,SDE}: " +
                    fmt("%.3f", worst) + " (limit 3)"};
}

// Euler error against the closed-form Gaussian transport at NFE 64..512.
Outcome euler_convergence() {
  const SpectralBasis basis = quadratic_basis(4);
  const NoiseSchedule schedule = NoiseSchedule::cosine();
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const MixtureDataSpec spec = gaussian_sanity_spec(lambda, 1.0, 0.5);
  const ScoreFn score = oracle_score(spec, lambda, schedule);
  std::vector<double> err;
  for (std::size_t nfe : {64, 128, 256, 512}) {
    SamplerConfig cfg;
    cfg.nfe = nfe;
    cfg.count = 200;
    cfg.seed = 5;
    const SamplerOutput out = pf_ode_sample(score, basis, schedule, cfg);
    const Eigen::MatrixXd y0 = sample_prior_coeffs(lambda, cfg.count, cfg.seed);
    double e = 0.0;
    for (Eigen::Index i = 0; i < y0.rows(); ++i) {
      const Eigen::VectorXd exact =
          exact_gaussian_transport(spec, lambda, schedule, y0.row(i).transpose(), cfg.t_eps);
      e = std::max(e, (out.coeffs.row(i).transpose() - exact).cwiseAbs().maxCoeff());
    }
    err.push_back(e);
  }
  bool pass = true;
  std::string detail = "max errors";
  for (double e : err) detail += fmt(" %.3e", e);
  detail += "; orders";
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double order = std::log2(err[i] / err[i + 1]);
    detail += fmt(" %.3f", order);
    pass = pass && order >= 0.9;
  }
  return {pass, detail + " (limit >= 0.9)"};
}

// Fitted affine score vs the closed-form coefficients at each bin center.
Outcome score_learning_recovery() {
  const SpectralBasis basis = quadratic_basis(8);
  const NoiseSchedule schedule = NoiseSchedule::cosine();
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const MixtureDataSpec spec = gaussian_sanity_spec(lambda, 1.0, 0.5);
  TrainingConfig cfg;
  cfg.samples_per_bin = 50000;
  cfg.seed = 17;
  const AffineScoreModel model = fit(spec, lambda, schedule, cfg);

  double worst_slope = 0.0;
  double worst_intercept = 0.0;
  double worst_function = 0.0;
  for (std::size_t b = 0; b < model.bins(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    const double center = 0.5 * (model.edges()[bi] + model.edges()[bi + 1]);
    const auto [a, c] = gaussian_score_coefficients(spec, lambda, schedule, center);
    for (Eigen::Index n = 0; n < lambda.size(); ++n) {
      const ModeDensityParams p =
          mode_density_params(spec, lambda, schedule, center, static_cast<std::size_t>(n));
      const double da = model.slope()(bi, n) - a[n];
      const double dc = model.intercept()(bi, n) - c[n];
      // Relative L2(mu_t) error of the affine map u -> a u + c.
      const double m = p.means[0];
      const double v = p.variances[0];
      const double err2 = da * da * (v + m * m) + 2.0 * da * dc * m + dc * dc;
      const double ref2 = a[n] * a[n] * (v + m * m) + 2.0 * a[n] * c[n] * m + c[n] * c[n];
      worst_slope = std::max(worst_slope, std::abs(da / a[n]));
      worst_intercept = std::max(worst_intercept, std::abs(dc / c[n]));
      worst_function = std::max(worst_function, std::sqrt(err2 / ref2));
    }
  }
  const bool pass = worst_slope <= 0.05 && worst_function <= 0.05;
  return {pass, "max relative error over 32 bins x 8 modes: slope " + fmt("%.4f", worst_slope) +
                    ", affine map in L2(mu_t) " + fmt("%.4f", worst_function) +
                    " (limit 0.05); intercept " + fmt("%.4f", worst_intercept) + " (reported)"};
}

// Trapezoid quadrature of the per-mode linear SDE vs the closed-form marginal.
Outcome quadrature_marginal() {
  const NoiseSchedule schedule = NoiseSchedule::cosine();
  const LinearModeSde sde = LinearModeSde::variance_preserving(schedule);
  const double m0 = schedule.mean_factor(0.0);
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (double lambda : {1.4, 0.1, 1e-3}) {
    const MarginalStats init{m0, lambda * schedule.noise_variance_factor(0.0)};
    for (int i = 0; i <= 100; ++i) {
      const double t = i / 100.0;
      const MarginalStats q = marginal_stats_quadrature(sde, lambda, t, 20000, init);
      const ModeMarginal c = vp_marginal(schedule, t);
      const double var = lambda * c.noise_variance_factor;
      worst_mean = std::max(worst_mean, std::abs(q.mean_factor - c.mean_factor));
      worst_var = std::max(worst_var, std::abs(q.variance - var) / var);
    }
  }
  return {worst_mean <= 1e-4 && worst_var <= 1e-3,
          "101 t points, lambda {1.4, 0.1, 1e-3}: max mean-factor error " + fmt("%.3e", worst_mean) +
              " (limit 1e-4), max relative variance error " + fmt("%.3e", worst_var) +
              " (limit 1e-3)"};
}

// FTCS decay of the (1, 1) Dirichlet eigenmode against exp(-beta pi^2 t / 2).
Outcome heat_oracle() {
  using std::numbers::pi;
  HeatProblem problem;
  problem.beta = 0.05;
  problem.grid = Grid::square(128, {-1.0, 1.0}, {-1.0, 1.0});
  problem.dt = HeatProblem::stable_dt(problem.grid, problem.beta);
  const Eigen::VectorXd ic = sine_field(problem.grid, {{1.0, 1, 1}});
  const SpaceTimeField u = heat_solve(problem, ic, {0.0, 1.0});
  const double measured = u.frames.row(1).dot(ic.transpose()) / ic.squaredNorm();
  const double analytic = std::exp(-problem.beta * pi * pi / 2.0);
  const double rel = std::abs(measured / analytic - 1.0);
  return {rel <= 0.01, "128^2, beta 0.05, t 1: measured/analytic - 1 = " + fmt("%.3e", rel) +
                           " (limit 0.01)"};
}

// ODE vs SDE on the quadratic mixture and on the heat protocol.
Outcome nfe_robustness() {
  RunConfig cfg;
  cfg.experiment = Experiment::quadratic;
  cfg.basis = BasisConfig{};
  cfg.sampler.methods = {Method::ode, Method::sde};
  cfg.sampler.nfe = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  cfg.sampler.count = 1000;
  cfg.sampler.seed = 2024;
  cfg.metrics.metrics = {"sw"};
  const std::vector<ResultRow> sw = sweep_nfe(cfg);

  bool sw_pass = true;
  std::string detail = "SW ode/sde:";
  for (std::size_t nfe : cfg.sampler.nfe) {
    double ode = 0.0;
    double sde = 0.0;
    for (const auto& r : sw) {
      if (r.nfe != nfe) continue;
      (r.method == "ode" ? ode : sde) = r.value;
    }
    detail += fmt(" %.3g", ode) + fmt("/%.3g", sde);
    sw_pass = sw_pass && ode <= sde;
  }

  RunConfig pcfg = cfg;
  pcfg.metrics.metrics = {"power"};
  pcfg.metrics.power_samples = 200;
  pcfg.metrics.test.trials = 100;
  pcfg.metrics.test.permutations = 200;
  pcfg.sampler.methods = {Method::sde};
  std::vector<ResultRow> power = sweep_nfe(pcfg);
  pcfg.sampler.methods = {Method::ode};
  pcfg.sampler.nfe = {20};
  const double ode20 = sweep_nfe(pcfg).front().value;
  bool power_pass = true;
  detail += fmt("; power ode@20 %.2f vs sde:", ode20);
  for (const auto& r : power) {
    detail += fmt(" %.2f", r.value);
    power_pass = power_pass && ode20 <= r.value;
  }

  RunConfig hcfg;
  hcfg.experiment = Experiment::heat;
  hcfg.heat = HeatConfig{};
  hcfg.heat->dt = 1e-3;
  const HeatSetup heat = build_heat_setup(hcfg);
  const HeatSampleResult ode = heat_eval_method(heat, Method::ode, 10, 16, 7, 1e-3);
  const HeatSampleResult sde = heat_eval_method(heat, Method::sde, 10, 16, 7, 1e-3);
  double l2_ode = 0.0;
  double l2_sde = 0.0;
  for (double v : ode.l2) l2_ode += v / static_cast<double>(ode.l2.size());
  for (double v : sde.l2) l2_sde += v / static_cast<double>(sde.l2.size());
  const bool heat_pass = l2_ode <= l2_sde;
  detail += fmt("; heat mean L2 at NFE 10 ode %.4g", l2_ode) + fmt(" sde %.4g", l2_sde);
  detail += std::string(" [sw ") + (sw_pass ? "ok" : "FAIL") + ", power " +
            (power_pass ? "ok" : "FAIL") + ", heat " + (heat_pass ? "ok" : "FAIL") + "]";
  return {sw_pass && power_pass && heat_pass, detail};
}

// SW axioms on random triples and H0 calibration of the FPCA kernel test.
Outcome metric_self_tests() {
  const SpectralBasis basis = quadratic_basis(32);
  const MixtureDataSpec spec =
      quadratic_dataset_spec(basis, 1.0);
  bool axioms = true;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const SampleSet a{sample_mixture(spec, 50, derive_seed(k, 1)), 1.0};
    const SampleSet b{sample_mixture(spec, 50, derive_seed(k, 2)), 1.0};
    const SampleSet c{sample_mixture(spec, 50, derive_seed(k, 3)), 1.0};
    const double ab = sliced_wasserstein(a, b, 64, k);
    const double ba = sliced_wasserstein(b, a, 64, k);
    const double bc = sliced_wasserstein(b, c, 64, k);
    const double ac = sliced_wasserstein(a, c, 64, k);
    const double aa = sliced_wasserstein(a, a, 64, k);
    axioms = axioms && ab >= 0.0 && aa == 0.0 && std::abs(ab - ba) <= 1e-12 * ab &&
             ac <= ab + bc + 1e-12 * (ab + bc);
  }
  TestConfig tc;
  tc.seed = 99;
  const SampleSource gen = [&](std::size_t trial) {
    return SampleSet{sample_mixture(spec, 100, derive_seed(1, trial)), 1.0};
  };
  const SampleSource ref = [&](std::size_t trial) {
    return SampleSet{sample_mixture(spec, 100, derive_seed(2, trial)), 1.0};
  };
  const double power = test_power(gen, ref, tc);
  const bool calibrated = power <= 0.13;
  return {axioms && calibrated, std::string("SW axioms on 100 triples: ") + (axioms ? "hold" : "VIOLATED") +
                                    fmt("; H0 rejection rate %.2f", power) +
                                    " over 100 trials (99% band [0, 0.13])"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"stationary fixed point", 1.0, stationary_fixed_point},
      {"marginal agreement", 120.0, marginal_agreement},
      {"Euler convergence to exact transport", 30.0, euler_convergence},
      {"score-learning recovery", 60.0, score_learning_recovery},
      {"quadrature vs closed-form marginal", 5.0, quadrature_marginal},
      {"heat oracle accuracy", 30.0, heat_oracle},
      {"NFE-robustness ordering", 600.0, nfe_robustness},
      {"metric self-tests", 300.0, metric_self_tests},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s  %s: %s; %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " OVER TIME");
    std::fflush(stdout);
  }
  std::printf("%d of %zu primary criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
