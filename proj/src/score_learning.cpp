#include "pfode/score_learning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pfode/csv.hpp"
#include "pfode/errors.hpp"
#include "pfode/kernels.hpp"
#include "pfode/rng.hpp"

namespace pfode {

AffineScoreModel::AffineScoreModel(Eigen::VectorXd edges, Eigen::MatrixXd slope,
                                   Eigen::MatrixXd intercept)
    : edges_(std::move(edges)), slope_(std::move(slope)), intercept_(std::move(intercept)) {
  if (edges_.size() < 2) throw InvalidArgument("score model: needs at least one bin");
  for (Eigen::Index i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) throw InvalidArgument("score model: bin edges must increase");
  }
  if (slope_.rows() != edges_.size() - 1 || intercept_.rows() != slope_.rows() ||
      intercept_.cols() != slope_.cols()) {
    throw DimensionMismatch("score model: coefficient shape does not match bins");
  }
}

AffineScoreModel AffineScoreModel::zeros(std::size_t bins, std::size_t modes, double t_min,
                                         double t_max) {
  const auto b = static_cast<Eigen::Index>(bins);
  const auto m = static_cast<Eigen::Index>(modes);
  Eigen::VectorXd edges(b + 1);
  for (Eigen::Index i = 0; i <= b; ++i) {
    edges[i] = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(b);
  }
  edges[b] = t_max;
  return AffineScoreModel(std::move(edges), Eigen::MatrixXd::Zero(b, m),
                          Eigen::MatrixXd::Zero(b, m));
}

std::size_t AffineScoreModel::bin_of(double t) const {
  const Eigen::Index last = edges_.size() - 1;
  if (!(t >= edges_[0] && t <= edges_[last])) {
    throw OutOfRange("score model: t = " + std::to_string(t) + " outside [" +
                     std::to_string(edges_[0]) + ", " + std::to_string(edges_[last]) + "]");
  }
  // First edge >= t closes the bin on the right.
  const double* begin = edges_.data() + 1;
  const double* it = std::lower_bound(begin, edges_.data() + last + 1, t);
  return static_cast<std::size_t>(it - begin);
}

Eigen::VectorXd AffineScoreModel::evaluate(double t, const Eigen::VectorXd& u) const {
  if (u.size() != slope_.cols()) throw DimensionMismatch("score model: coefficient length mismatch");
  const auto b = static_cast<Eigen::Index>(bin_of(t));
  return slope_.row(b).transpose().cwiseProduct(u) + intercept_.row(b).transpose();
}

ScoreFn AffineScoreModel::as_score() const {
  return [model = *this](double t, const Eigen::VectorXd& u) { return model.evaluate(t, u); };
}

void TrainingConfig::validate() const {
  if (samples_per_bin < 10) throw InvalidArgument("training: samples_per_bin must be >= 10");
  if (!(ridge >= 0.0)) throw InvalidArgument("training: ridge must be >= 0");
  if (bins < 1) throw InvalidArgument("training: bins must be >= 1");
  if (!(t_min > 0.0 && t_min < 1.0)) throw InvalidArgument("training: t_min must be in (0, 1)");
}

DsmBatch dsm_targets(const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
                     const NoiseSchedule& schedule, double t, std::size_t count,
                     std::uint64_t seed) {
  spec.validate();
  const Eigen::Index m = eigenvalues.size();
  if (static_cast<Eigen::Index>(spec.modes()) != m) {
    throw DimensionMismatch("dsm_targets: spectrum length mismatch");
  }
  const Eigen::MatrixXd x0 = sample_mixture(spec, count, seed);
  const std::uint64_t stream = derive_seed(seed, kTrainStream);
  const ModeMarginal mm = vp_marginal(schedule, t);
  const Eigen::VectorXd sd = (eigenvalues * mm.noise_variance_factor).cwiseSqrt();
  DsmBatch out{Eigen::MatrixXd(x0.rows(), m), Eigen::MatrixXd(x0.rows(), m)};
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    Rng rng = substream(stream, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    Eigen::VectorXd xt(m);
    for (Eigen::Index n = 0; n < m; ++n) xt[n] = mm.mean_factor * x0(i, n) + sd[n] * normal(rng);
    out.xt.row(i) = xt.transpose();
    out.target.row(i) =
        conditional_log_gradient(x0.row(i).transpose(), schedule, t, xt).transpose();
  }
  return out;
}

namespace {

struct NormalSums {
  double n = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  void add(double x, double y) {
    n += 1.0;
    sx += x;
    sxx += x * x;
    sy += y;
    sxy += x * y;
  }
};

}  // namespace

AffineScoreModel fit(const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
                     const NoiseSchedule& schedule, const TrainingConfig& cfg) {
  cfg.validate();
  spec.validate();
  const Eigen::Index m = eigenvalues.size();
  if (static_cast<Eigen::Index>(spec.modes()) != m) {
    throw DimensionMismatch("fit: spectrum length mismatch");
  }
  AffineScoreModel zero = AffineScoreModel::zeros(cfg.bins, static_cast<std::size_t>(m), cfg.t_min);
  const Eigen::VectorXd edges = zero.edges();
  Eigen::MatrixXd slope(static_cast<Eigen::Index>(cfg.bins), m);
  Eigen::MatrixXd intercept(static_cast<Eigen::Index>(cfg.bins), m);
  const Eigen::MatrixXd data_sd = spec.variances.cwiseSqrt();
  const Eigen::VectorXd lambda_sd = eigenvalues.cwiseSqrt();
  const std::uint64_t stream = derive_seed(cfg.seed, kTrainStream);

  kernels::for_each_index(cfg.bins, cfg.exec, [&](std::size_t bin) {
    const auto b = static_cast<Eigen::Index>(bin);
    Rng rng = substream(stream, bin);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal;
    std::vector<NormalSums> sums(static_cast<std::size_t>(m));
    Eigen::VectorXd eps(m);

    const auto add = [&](const Eigen::VectorXd& x0, double mt, double sigma, double sign) {
      for (Eigen::Index n = 0; n < m; ++n) {
        const double noise = sign * sigma * lambda_sd[n] * eps[n];
        // Target -(x_t - m x0) / (1 - m^2), written through the drawn noise.
        sums[static_cast<std::size_t>(n)].add(mt * x0[n] + noise, -noise / (sigma * sigma));
      }
    };

    std::size_t drawn = 0;
    while (drawn < cfg.samples_per_bin) {
      const double t = edges[b] + (edges[b + 1] - edges[b]) * uniform(rng);
      const ModeMarginal mm = vp_marginal(schedule, t);
      const double sigma = std::sqrt(mm.noise_variance_factor);
      const Eigen::VectorXd x0 = draw_mixture(spec, data_sd, rng);
      for (Eigen::Index n = 0; n < m; ++n) eps[n] = normal(rng);
      add(x0, mm.mean_factor, sigma, 1.0);
      ++drawn;
      if (cfg.antithetic && drawn < cfg.samples_per_bin) {
        add(x0, mm.mean_factor, sigma, -1.0);
        ++drawn;
      }
    }

    for (Eigen::Index n = 0; n < m; ++n) {
      const NormalSums& s = sums[static_cast<std::size_t>(n)];
      const double r = cfg.ridge;
      const double axx = s.sxx + r;
      const double a11 = s.n + r;
      const double det = axx * a11 - s.sx * s.sx;
      if (!(det > 1e-14 * axx * a11)) {
        throw SingularFit("fit: singular normal equations in bin " + std::to_string(bin) +
                          ", mode " + std::to_string(n));
      }
      slope(b, n) = (a11 * s.sxy - s.sx * s.sy) / det;
      intercept(b, n) = (axx * s.sy - s.sx * s.sxy) / det;
    }
  });
  return AffineScoreModel(edges, std::move(slope), std::move(intercept));
}

double dsm_loss(const AffineScoreModel& model, double t, const DsmBatch& batch) {
  if (batch.xt.rows() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < batch.xt.rows(); ++i) {
    const Eigen::VectorXd s = model.evaluate(t, batch.xt.row(i).transpose());
    acc += (s - batch.target.row(i).transpose()).squaredNorm();
  }
  return acc / static_cast<double>(batch.xt.rows());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gaussian_score_coefficients(
    const MixtureDataSpec& spec, const Eigen::VectorXd& eigenvalues,
    const NoiseSchedule& schedule, double t) {
  if (spec.components() != 1) {
    throw InvalidArgument("gaussian_score_coefficients: needs a single-component spec");
  }
  const Eigen::Index m = eigenvalues.size();
  Eigen::VectorXd a(m);
  Eigen::VectorXd b(m);
  for (Eigen::Index n = 0; n < m; ++n) {
    const ModeDensityParams p =
        mode_density_params(spec, eigenvalues, schedule, t, static_cast<std::size_t>(n));
    a[n] = -eigenvalues[n] / p.variances[0];
    b[n] = eigenvalues[n] * p.means[0] / p.variances[0];
  }
  return {a, b};
}

void write_model_csv(std::ostream& os, const AffineScoreModel& model) {
  std::vector<std::string> edges{"bin_edges"};
  for (Eigen::Index i = 0; i < model.edges().size(); ++i) edges.push_back(csv::format(model.edges()[i]));
  csv::write_row(os, edges);
  csv::write_row(os, {"bin", "mode", "slope", "intercept"});
  for (Eigen::Index b = 0; b < model.slope().rows(); ++b)
    for (Eigen::Index n = 0; n < model.slope().cols(); ++n)
      csv::write_row(os, {std::to_string(b), std::to_string(n), csv::format(model.slope()(b, n)),
                          csv::format(model.intercept()(b, n))});
}

AffineScoreModel read_model_csv(std::istream& is) {
  std::string first;
  if (!std::getline(is, first)) throw InvalidArgument("model csv: empty input");
  std::vector<double> edge_values;
  {
    std::istringstream line(first);
    std::string cell;
    std::getline(line, cell, ',');
    if (cell != "bin_edges") throw InvalidArgument("model csv: first line must start with bin_edges");
    while (std::getline(line, cell, ',')) edge_values.push_back(std::stod(cell));
  }
  const csv::Table table = csv::read(is);
  const std::size_t bc = table.column("bin");
  const std::size_t nc = table.column("mode");
  const std::size_t sc = table.column("slope");
  const std::size_t ic = table.column("intercept");
  const auto bins = static_cast<Eigen::Index>(edge_values.size()) - 1;
  Eigen::Index modes = 0;
  for (const auto& r : table.rows) modes = std::max<Eigen::Index>(modes, std::stol(r[nc]) + 1);
  Eigen::MatrixXd slope = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(bins, 0), modes);
  Eigen::MatrixXd intercept = slope;
  for (const auto& r : table.rows) {
    const Eigen::Index b = std::stol(r[bc]);
    const Eigen::Index n = std::stol(r[nc]);
    if (b < 0 || b >= bins) throw InvalidArgument("model csv: bin index out of range");
    slope(b, n) = std::stod(r[sc]);
    intercept(b, n) = std::stod(r[ic]);
  }
  return AffineScoreModel(Eigen::Map<Eigen::VectorXd>(edge_values.data(),
                                                      static_cast<Eigen::Index>(edge_values.size())),
                          std::move(slope), std::move(intercept));
}

}  // namespace pfode
