#include "pfode/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "pfode/csv.hpp"
#include "pfode/errors.hpp"
#include "pfode/kernels.hpp"
#include "pfode/metrics.hpp"
#include "pfode/rng.hpp"
#include "pfode/score_learning.hpp"

#ifndef PFODE_BUILD_HASH
#define PFODE_BUILD_HASH "unknown"
#endif

namespace pfode {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kReferenceStream = 0x524546ULL;
constexpr std::uint64_t kProjectionStream = 0x50524F4AULL;
constexpr std::uint64_t kPowerStream = 0x504F574552ULL;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(const fs::path& path, const Metadata& meta) {
  csv::write_atomic(path, [&](std::ostream& os) {
    csv::write_row(os, {"key", "value"});
    for (const auto& [k, v] : meta) csv::write_row(os, {k, v});
  });
}

std::string batch_stem(Method method, std::size_t nfe) {
  return std::string(method_name(method)) + "_nfe" + std::to_string(nfe);
}

}  // namespace

std::string build_hash() { return PFODE_BUILD_HASH; }

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  csv::write_row(os, {"experiment", "method", "nfe", "metric", "value", "seed"});
  for (const auto& r : rows) {
    csv::write_row(os, {r.experiment, r.method, std::to_string(r.nfe), r.metric,
                        csv::format(r.value), std::to_string(r.seed)});
  }
}

void write_timings_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  csv::write_row(os, {"method", "nfe", "metric", "wall_ms"});
  for (const auto& r : rows) {
    csv::write_row(os, {r.method, std::to_string(r.nfe), r.metric, csv::format(r.wall_ms)});
  }
}

SpectralBasis build_basis(const BasisConfig& cfg) {
  if (cfg.kind == "rbf") {
    const Grid grid = Grid::line(cfg.points, {cfg.lower, cfg.upper});
    return rbf_basis(grid, cfg.rbf, cfg.truncation);
  }
  if (cfg.kind == "bessel") {
    const Grid grid = Grid::square(cfg.points, {cfg.lower, cfg.upper}, {cfg.lower, cfg.upper},
                                   GridLayout::periodic);
    return bessel_basis(grid, cfg.bessel, cfg.truncation);
  }
  throw ConfigError("unknown basis kind '" + cfg.kind + "'");
}

NoiseSchedule build_schedule(const ScheduleConfig& cfg) {
  return NoiseSchedule::cosine(cfg.logsnr_max, cfg.logsnr_min);
}

MixtureDataSpec gaussian_sanity_spec(const Eigen::VectorXd& eigenvalues, double mean_scale,
                                     double variance_ratio) {
  return MixtureDataSpec::gaussian(mean_scale * eigenvalues.cwiseSqrt(),
                                   variance_ratio * eigenvalues);
}

Setup build_setup(const RunConfig& cfg) {
  if (!cfg.basis) throw ConfigError("missing [basis] section");
  SpectralBasis basis = build_basis(*cfg.basis);
  NoiseSchedule schedule = build_schedule(cfg.schedule);
  MixtureDataSpec spec;
  switch (cfg.experiment) {
    case Experiment::quadratic:
      spec = quadratic_dataset_spec(basis, cfg.data.noise_variance);
      break;
    case Experiment::gaussian_sanity:
      spec = gaussian_sanity_spec(basis.eigenvalues(), cfg.data.mean_scale, cfg.data.variance_ratio);
      break;
    case Experiment::heat:
      throw ConfigError("the heat experiment has no coefficient-space setup");
  }
  ScoreFn score;
  if (cfg.sampler.score == "learned") {
    if (spec.components() != 1) {
      throw ConfigError("learned score needs single-component data (experiment gaussian_sanity)");
    }
    if (cfg.training.t_min > cfg.sampler.t_eps) {
      throw ConfigError("[training] t_min must not exceed [sampler] t_eps");
    }
    score = fit(spec, basis.eigenvalues(), schedule, cfg.training).as_score();
  } else {
    score = oracle_score(spec, basis.eigenvalues(), schedule);
  }
  return {std::move(basis), schedule, std::move(spec), std::move(score)};
}

SamplerOutput generate(const Setup& setup, const RunConfig& cfg, Method method, std::size_t nfe,
                       std::size_t count, std::uint64_t seed, Exec exec) {
  SamplerConfig sc;
  sc.nfe = nfe;
  sc.method = method;
  sc.t_eps = cfg.sampler.t_eps;
  sc.seed = seed;
  sc.count = count;
  sc.exec = exec;
  return sample(setup.score, setup.basis, setup.schedule, sc);
}

namespace {

TestConfig power_config(const RunConfig& cfg) {
  TestConfig tc = cfg.metrics.test;
  tc.exec = Exec::parallel;
  return tc;
}

// Reference source for trial i: exact draws from the data spec. The stream
// does not depend on the method or nfe being tested.
SampleSource reference_source(const Setup& setup, const RunConfig& cfg, std::uint64_t tag) {
  const std::uint64_t base = derive_seed(cfg.sampler.seed, tag);
  const std::size_t n = cfg.metrics.power_samples;
  return [&setup, base, n](std::size_t trial) {
    return SampleSet{sample_mixture(setup.spec, n, derive_seed(base, trial)), 1.0};
  };
}

SampleSource generated_source(const Setup& setup, const RunConfig& cfg, Method method,
                              std::size_t nfe) {
  const std::uint64_t base = derive_seed(cfg.sampler.seed, kPowerStream);
  const std::size_t n = cfg.metrics.power_samples;
  return [&setup, &cfg, method, nfe, base, n](std::size_t trial) {
    return SampleSet{
        generate(setup, cfg, method, nfe, n, derive_seed(base, trial), Exec::serial).coeffs, 1.0};
  };
}

}  // namespace

std::vector<ResultRow> sweep_nfe(const RunConfig& cfg) {
  const Setup setup = build_setup(cfg);
  const std::string exp = experiment_name(cfg.experiment);
  const std::size_t ref_count =
      cfg.metrics.reference_count ? cfg.metrics.reference_count : cfg.sampler.count;
  const SampleSet reference{
      sample_mixture(setup.spec, ref_count, derive_seed(cfg.sampler.seed, kReferenceStream)), 1.0};
  const std::uint64_t projection_seed = derive_seed(cfg.sampler.seed, kProjectionStream);
  const auto wants = [&](const char* m) {
    return std::find(cfg.metrics.metrics.begin(), cfg.metrics.metrics.end(), m) !=
           cfg.metrics.metrics.end();
  };

  std::vector<ResultRow> rows;
  for (Method method : cfg.sampler.methods) {
    for (std::size_t nfe : cfg.sampler.nfe) {
      if (wants("sw")) {
        const auto start = std::chrono::steady_clock::now();
        const SamplerOutput out =
            generate(setup, cfg, method, nfe, cfg.sampler.count, cfg.sampler.seed);
        const double sw = sliced_wasserstein(SampleSet{out.coeffs, 1.0}, reference,
                                             cfg.metrics.projections, projection_seed);
        rows.push_back({exp, method_name(method), nfe, "sw", sw, cfg.sampler.seed,
                        elapsed_ms(start)});
      }
      if (wants("power")) {
        const auto start = std::chrono::steady_clock::now();
        const double power = test_power(generated_source(setup, cfg, method, nfe),
                                        reference_source(setup, cfg, kReferenceStream),
                                        power_config(cfg));
        rows.push_back({exp, method_name(method), nfe, "power", power, cfg.sampler.seed,
                        elapsed_ms(start)});
      }
    }
  }
  return rows;
}

std::vector<ResultRow> test_power_rows(const RunConfig& cfg) {
  const Setup setup = build_setup(cfg);
  const std::string exp = experiment_name(cfg.experiment);
  std::vector<ResultRow> rows;
  {
    const auto start = std::chrono::steady_clock::now();
    const double h0 = test_power(reference_source(setup, cfg, kReferenceStream + 1),
                                 reference_source(setup, cfg, kReferenceStream),
                                 power_config(cfg));
    rows.push_back({exp, "reference", 0, "power_h0", h0, cfg.sampler.seed, elapsed_ms(start)});
  }
  for (Method method : cfg.sampler.methods) {
    for (std::size_t nfe : cfg.sampler.nfe) {
      const auto start = std::chrono::steady_clock::now();
      const double power = test_power(generated_source(setup, cfg, method, nfe),
                                      reference_source(setup, cfg, kReferenceStream),
                                      power_config(cfg));
      rows.push_back({exp, method_name(method), nfe, "power", power, cfg.sampler.seed,
                      elapsed_ms(start)});
    }
  }
  return rows;
}

HeatSetup build_heat_setup(const RunConfig& cfg) {
  if (!cfg.heat) throw ConfigError("missing [heat] section");
  const HeatConfig& h = *cfg.heat;
  const Grid grid = Grid::square(h.grid_points, {-1.0, 1.0}, {-1.0, 1.0});
  HeatFieldBasis basis(grid, h.spatial_modes, uniform_save_times(h.t_end, h.frames), h.beta,
                       h.prior_scale, h.prior_power);
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  Eigen::VectorXd variance = lambda;
  const auto& modes = basis.mode_table();
  const int s = static_cast<int>(h.structure_modes);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& m = modes[i];
    if (m.j == 0 && m.k <= s && m.l <= s) {
      const double p = basis.profile_norm(m.k, m.l);
      variance[static_cast<Eigen::Index>(i)] = h.structure_variance * p * p;
    }
  }
  MixtureDataSpec spec = MixtureDataSpec::gaussian(Eigen::VectorXd::Zero(lambda.size()), variance);
  HeatProblem problem;
  problem.beta = h.beta;
  problem.grid = grid;
  problem.t_end = h.t_end;
  problem.dt = h.dt;
  problem.bc = h.bc;
  problem.validate();
  return {std::move(basis), std::move(spec), problem, build_schedule(cfg.schedule)};
}

HeatSampleResult heat_eval_method(const HeatSetup& setup, Method method, std::size_t nfe,
                                  std::size_t count, std::uint64_t seed, double t_eps,
                                  Exec exec) {
  const Eigen::VectorXd& lambda = setup.basis.eigenvalues();
  SamplerConfig sc;
  sc.nfe = nfe;
  sc.method = method;
  sc.t_eps = t_eps;
  sc.seed = seed;
  sc.count = count;
  sc.exec = exec;
  const SamplerOutput out =
      sample(oracle_score(setup.spec, lambda, setup.schedule), lambda, setup.schedule, sc);

  HeatSampleResult r{std::vector<double>(count), std::vector<double>(count), {}, {}};
  std::vector<SpaceTimeField> first(2);
  HeatProblem serial = setup.problem;
  serial.exec = Exec::serial;
  kernels::for_each_index(count, exec, [&](std::size_t i) {
    const SpaceTimeField synt =
        setup.basis.synthesize(out.coeffs.row(static_cast<Eigen::Index>(i)).transpose());
    const SpaceTimeField truth = regenerate_ground_truth(synt, serial);
    r.l2[i] = lp_distance(synt, truth, Norm::l2);
    r.linf[i] = lp_distance(synt, truth, Norm::linf);
    if (i == 0) first = {synt, truth};
  });
  if (count > 0) {
    r.first_synthetic = std::move(first[0]);
    r.first_truth = std::move(first[1]);
  }
  return r;
}

HeatSampleResult heat_self_test(const HeatSetup& setup, std::size_t count, std::size_t terms,
                                std::uint64_t seed) {
  const Grid& grid = setup.problem.grid;
  const std::vector<double>& times = setup.basis.save_times();
  HeatSampleResult r{std::vector<double>(count), std::vector<double>(count), {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    const std::vector<SineTerm> draw = draw_sine_terms(terms, derive_seed(seed, i));
    SpaceTimeField synt{Eigen::MatrixXd(static_cast<Eigen::Index>(times.size()),
                                        static_cast<Eigen::Index>(grid.total_points())),
                        times, grid.quadrature_weight()};
    for (std::size_t f = 0; f < times.size(); ++f) {
      synt.frames.row(static_cast<Eigen::Index>(f)) =
          sine_field(grid, draw, setup.problem.beta, times[f]).transpose();
    }
    const SpaceTimeField truth = regenerate_ground_truth(synt, setup.problem);
    r.l2[i] = lp_distance(synt, truth, Norm::l2);
    r.linf[i] = lp_distance(synt, truth, Norm::linf);
    if (i == 0) {
      r.first_synthetic = synt;
      r.first_truth = truth;
    }
  }
  return r;
}

namespace {

Metadata base_metadata(const RunConfig& cfg) {
  return {{"experiment", experiment_name(cfg.experiment)},
          {"seed", std::to_string(cfg.sampler.seed)},
          {"t_eps", csv::format(cfg.sampler.t_eps)},
          {"build", build_hash()}};
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double denom = v.size() > 1 ? static_cast<double>(v.size() - 1) : 1.0;
  return {mean, std::sqrt(var / denom)};
}

}  // namespace

void run_sample(const RunConfig& cfg, const fs::path& out) {
  const Setup setup = build_setup(cfg);
  fs::create_directories(out);
  csv::write_atomic(out / "basis.csv",
                    [&](std::ostream& os) { write_basis_csv(os, setup.basis.eigenvalues()); });
  csv::write_atomic(out / "data_spec.csv",
                    [&](std::ostream& os) { write_mixture_csv(os, setup.spec); });
  for (Method method : cfg.sampler.methods) {
    for (std::size_t nfe : cfg.sampler.nfe) {
      const SamplerOutput s = generate(setup, cfg, method, nfe, cfg.sampler.count, cfg.sampler.seed);
      const std::string stem = "samples_" + batch_stem(method, nfe);
      csv::write_atomic(out / (stem + ".csv"), [&](std::ostream& os) { write_coeff_csv(os, s.coeffs); });
      if (setup.basis.grid()) {
        std::vector<FunctionSample> values;
        values.reserve(static_cast<std::size_t>(s.coeffs.rows()));
        for (Eigen::Index i = 0; i < s.coeffs.rows(); ++i) {
          const Eigen::VectorXd c = s.coeffs.row(i).transpose();
          values.push_back({c, from_coeffs(c, setup.basis)});
        }
        csv::write_atomic(out / ("grid_" + batch_stem(method, nfe) + ".csv"),
                          [&](std::ostream& os) { write_grid_csv(os, values); });
      }
      Metadata meta = base_metadata(cfg);
      meta.insert(meta.end(), {{"method", method_name(method)},
                               {"nfe", std::to_string(nfe)},
                               {"count", std::to_string(cfg.sampler.count)},
                               {"truncation", std::to_string(setup.basis.truncation())},
                               {"score", cfg.sampler.score},
                               {"score_evaluations", std::to_string(s.score_evaluations)},
                               {"basis_hash", hex(setup.basis.fingerprint())}});
      write_metadata(out / (stem + ".meta.csv"), meta);
    }
  }
}

void run_sweep(const RunConfig& cfg, const fs::path& out) {
  const std::vector<ResultRow> rows = sweep_nfe(cfg);
  fs::create_directories(out);
  csv::write_atomic(out / "results.csv", [&](std::ostream& os) { write_results_csv(os, rows); });
  csv::write_atomic(out / "timings.csv", [&](std::ostream& os) { write_timings_csv(os, rows); });
  Metadata meta = base_metadata(cfg);
  meta.push_back({"basis_hash", hex(build_basis(*cfg.basis).fingerprint())});
  meta.push_back({"score", cfg.sampler.score});
  write_metadata(out / "results.meta.csv", meta);
}

void run_test_power(const RunConfig& cfg, const fs::path& out) {
  const std::vector<ResultRow> rows = test_power_rows(cfg);
  fs::create_directories(out);
  csv::write_atomic(out / "power.csv", [&](std::ostream& os) { write_results_csv(os, rows); });
  csv::write_atomic(out / "power_timings.csv",
                    [&](std::ostream& os) { write_timings_csv(os, rows); });
  Metadata meta = base_metadata(cfg);
  meta.push_back({"basis_hash", hex(build_basis(*cfg.basis).fingerprint())});
  write_metadata(out / "power.meta.csv", meta);
}

void run_heat_eval(const RunConfig& cfg, const fs::path& out) {
  const HeatSetup setup = build_heat_setup(cfg);
  const HeatConfig& h = *cfg.heat;
  fs::create_directories(out);

  struct Batch {
    std::string method;
    std::size_t nfe;
    HeatSampleResult result;
  };
  std::vector<Batch> batches;
  if (h.self_test) {
    batches.push_back({"exact", 0, heat_self_test(setup, h.samples, h.self_test_terms,
                                                  cfg.sampler.seed)});
  } else {
    for (Method method : cfg.sampler.methods)
      for (std::size_t nfe : cfg.sampler.nfe)
        batches.push_back({method_name(method), nfe,
                           heat_eval_method(setup, method, nfe, h.samples, cfg.sampler.seed,
                                            cfg.sampler.t_eps)});
  }

  std::vector<ResultRow> rows;
  csv::write_atomic(out / "heat_distances.csv", [&](std::ostream& os) {
    csv::write_row(os, {"sample_id", "method", "nfe", "l2", "linf"});
    for (const auto& b : batches)
      for (std::size_t i = 0; i < b.result.l2.size(); ++i)
        csv::write_row(os, {std::to_string(i), b.method, std::to_string(b.nfe),
                            csv::format(b.result.l2[i]), csv::format(b.result.linf[i])});
  });
  for (const auto& b : batches) {
    const auto [l2m, l2s] = mean_std(b.result.l2);
    const auto [lim, lis] = mean_std(b.result.linf);
    for (const auto& [metric, value] : std::vector<std::pair<std::string, double>>{
             {"l2_mean", l2m}, {"l2_std", l2s}, {"linf_mean", lim}, {"linf_std", lis}}) {
      rows.push_back({"heat", b.method, b.nfe, metric, value, cfg.sampler.seed, 0.0});
    }
    if (!b.result.l2.empty()) {
      const std::string stem = "field_" + b.method + "_nfe" + std::to_string(b.nfe);
      csv::write_atomic(out / (stem + "_synthetic.csv"),
                        [&](std::ostream& os) { write_field_csv(os, b.result.first_synthetic); });
      csv::write_atomic(out / (stem + "_truth.csv"),
                        [&](std::ostream& os) { write_field_csv(os, b.result.first_truth); });
    }
  }
  csv::write_atomic(out / "results.csv", [&](std::ostream& os) { write_results_csv(os, rows); });
  Metadata meta = base_metadata(cfg);
  meta.push_back({"beta", csv::format(h.beta)});
  meta.push_back({"dt", csv::format(h.dt)});
  meta.push_back({"bc", h.bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann"});
  meta.push_back({"cfl", csv::format(setup.problem.cfl_number())});
  write_metadata(out / "results.meta.csv", meta);
}

void run_basis_dump(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  if (cfg.experiment == Experiment::heat) {
    const HeatSetup setup = build_heat_setup(cfg);
    csv::write_atomic(out / "basis.csv",
                      [&](std::ostream& os) { write_basis_csv(os, setup.basis.eigenvalues()); });
    csv::write_atomic(out / "basis_modes.csv", [&](std::ostream& os) {
      csv::write_row(os, {"mode", "k", "l", "j"});
      const auto& modes = setup.basis.mode_table();
      for (std::size_t i = 0; i < modes.size(); ++i)
        csv::write_row(os, {std::to_string(i), std::to_string(modes[i].k),
                            std::to_string(modes[i].l), std::to_string(modes[i].j)});
    });
    return;
  }
  if (!cfg.basis) throw ConfigError("missing [basis] section");
  const SpectralBasis basis = build_basis(*cfg.basis);
  csv::write_atomic(out / "basis.csv",
                    [&](std::ostream& os) { write_basis_csv(os, basis.eigenvalues()); });
  csv::write_atomic(out / "basis_vectors.csv", [&](std::ostream& os) {
    csv::write_row(os, {"mode", "idx", "value"});
    for (Eigen::Index m = 0; m < basis.eigenvectors().cols(); ++m)
      for (Eigen::Index i = 0; i < basis.eigenvectors().rows(); ++i)
        csv::write_row(os, {std::to_string(m), std::to_string(i),
                            csv::format(basis.eigenvectors()(i, m))});
  });
  Metadata meta = base_metadata(cfg);
  meta.push_back({"basis_hash", hex(basis.fingerprint())});
  write_metadata(out / "basis.meta.csv", meta);
}

}  // namespace pfode
