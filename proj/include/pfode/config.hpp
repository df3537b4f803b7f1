#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfode/kernels.hpp"
#include "pfode/metrics.hpp"
#include "pfode/samplers.hpp"
#include "pfode/score_learning.hpp"
#include "pfode/spectral.hpp"

namespace pfode {

/// Raw `key = value` text config with `[section]` headers and `#` comments.
/// Keys before the first header live in the unnamed top-level section "".
struct ConfigDocument {
  struct Entry {
    std::string value;
    int line = 0;
  };
  struct Section {
    std::string name;
    int line = 0;
    std::vector<std::pair<std::string, Entry>> entries;
    const Entry* find(const std::string& key) const;
  };
  std::vector<Section> sections;

  static ConfigDocument parse(const std::string& text);
  std::string serialize() const;
  const Section* find(const std::string& name) const;
  /// Same sections and key/value pairs, ignoring order and line numbers.
  bool equivalent(const ConfigDocument& other) const;
};

enum class Experiment { quadratic, gaussian_sanity, heat };
const char* experiment_name(Experiment e);

struct BasisConfig {
  std::string kind = "rbf";  // rbf | bessel
  std::size_t points = 100;
  double lower = -10.0;
  double upper = 10.0;
  RbfKernelSpec rbf;
  BesselPriorSpec bessel;
  std::size_t truncation = 32;
};

struct DataConfig {
  double noise_variance = 1.0;  // quadratic
  double mean_scale = 1.0;      // gaussian_sanity: mu_n = mean_scale sqrt(lambda_n)
  double variance_ratio = 0.5;  // gaussian_sanity: c_n = variance_ratio lambda_n
};

struct ScheduleConfig {
  double logsnr_max = 10.0;
  double logsnr_min = -10.0;
};

struct SamplerSection {
  std::vector<std::size_t> nfe{100};
  std::vector<Method> methods{Method::ode};
  std::size_t count = 64;
  std::uint64_t seed = 0;
  double t_eps = 1e-3;
  std::string score = "oracle";  // oracle | learned
};

struct MetricsConfig {
  std::vector<std::string> metrics{"sw"};  // sw | power
  std::size_t projections = 128;
  std::size_t reference_count = 0;  // 0: same as sampler count
  std::size_t power_samples = 200;
  TestConfig test;
};

struct HeatConfig {
  double beta = 0.05;
  double t_end = 1.0;
  double dt = 0.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  std::size_t grid_points = 64;
  std::size_t frames = 11;
  std::size_t spatial_modes = 8;
  std::size_t structure_modes = 4;
  double prior_scale = 1.0;
  double prior_power = 2.0;
  double structure_variance = 1.0;
  std::size_t samples = 16;
  bool self_test = false;
  std::size_t self_test_terms = 3;
};

struct RunConfig {
  Experiment experiment = Experiment::gaussian_sanity;
  std::optional<BasisConfig> basis;
  DataConfig data;
  ScheduleConfig schedule;
  SamplerSection sampler;
  MetricsConfig metrics;
  TrainingConfig training;
  std::optional<HeatConfig> heat;
  std::string output_dir = ".";

  /// Throws ConfigError with a line-anchored message on any problem.
  static RunConfig from_document(const ConfigDocument& doc);
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
};

}  // namespace pfode
