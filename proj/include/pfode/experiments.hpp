#pragma once

// End-to-end protocols shared by the CLI and the acceptance suite.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pfode/config.hpp"
#include "pfode/heat.hpp"
#include "pfode/mixture.hpp"
#include "pfode/samplers.hpp"
#include "pfode/schedule.hpp"
#include "pfode/spectral.hpp"

namespace pfode {

std::string build_hash();

struct ResultRow {
  std::string experiment;
  std::string method;
  std::size_t nfe = 0;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;  // kept out of the results CSV so it stays byte-stable
};

/// `experiment,method,nfe,metric,value,seed`.
void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
/// `method,nfe,metric,wall_ms`.
void write_timings_csv(std::ostream& os, const std::vector<ResultRow>& rows);

SpectralBasis build_basis(const BasisConfig& cfg);
NoiseSchedule build_schedule(const ScheduleConfig& cfg);

/// K = 1 Gaussian with mu_n = mean_scale sqrt(lambda_n), c_n = variance_ratio lambda_n.
MixtureDataSpec gaussian_sanity_spec(const Eigen::VectorXd& eigenvalues, double mean_scale,
                                     double variance_ratio);

/// Everything a coefficient-space experiment needs, built from a config.
struct Setup {
  SpectralBasis basis;
  NoiseSchedule schedule;
  MixtureDataSpec spec;
  ScoreFn score;
};

Setup build_setup(const RunConfig& cfg);

/// One (method, nfe) batch with the run seed, as the `sample` command writes it.
SamplerOutput generate(const Setup& setup, const RunConfig& cfg, Method method, std::size_t nfe,
                       std::size_t count, std::uint64_t seed, Exec exec = Exec::parallel);

/// SW and/or power for every (method, nfe) of the sweep. Reference draws
/// come from the data spec with one seed for the whole sweep.
std::vector<ResultRow> sweep_nfe(const RunConfig& cfg);

/// Power of each (method, nfe) against the data, plus an H0 row comparing
/// two independent reference sources (method "reference", nfe 0).
std::vector<ResultRow> test_power_rows(const RunConfig& cfg);

struct HeatSetup {
  HeatFieldBasis basis;
  MixtureDataSpec spec;
  HeatProblem problem;
  NoiseSchedule schedule;
};

/// Space-time Gaussian data for the heat protocol: modes (k, l, 0) with
/// k, l <= structure_modes carry heat-solution structure with variance
/// structure_variance * |profile|^2; every other mode is stationary (c = lambda).
HeatSetup build_heat_setup(const RunConfig& cfg);

struct HeatSampleResult {
  std::vector<double> l2;
  std::vector<double> linf;
  SpaceTimeField first_synthetic;
  SpaceTimeField first_truth;
};

/// Generates fields with the oracle score, re-solves each from its initial
/// frame and measures the distances.
HeatSampleResult heat_eval_method(const HeatSetup& setup, Method method, std::size_t nfe,
                                  std::size_t count, std::uint64_t seed, double t_eps,
                                  Exec exec = Exec::parallel);

/// Analytic sine-mixture heat solutions checked against the solver.
HeatSampleResult heat_self_test(const HeatSetup& setup, std::size_t count, std::size_t terms,
                                std::uint64_t seed);

/// Command bodies. Each writes its CSVs into `out` atomically.
void run_sample(const RunConfig& cfg, const std::filesystem::path& out);
void run_sweep(const RunConfig& cfg, const std::filesystem::path& out);
void run_heat_eval(const RunConfig& cfg, const std::filesystem::path& out);
void run_test_power(const RunConfig& cfg, const std::filesystem::path& out);
void run_basis_dump(const RunConfig& cfg, const std::filesystem::path& out);

}  // namespace pfode
