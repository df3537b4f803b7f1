#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "pfode/errors.hpp"
#include "pfode/heat.hpp"

namespace pfode {

using std::numbers::pi;

namespace {

// Modified Gram-Schmidt, applied twice, under the diagonal weight tau.
Eigen::MatrixXd weighted_orthonormalize(Eigen::MatrixXd v, const Eigen::VectorXd& tau) {
  const auto inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (tau.array() * a.array() * b.array()).sum();
  };
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::VectorXd x = v.col(j);
    const double start = std::sqrt(inner(x, x));
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) x -= inner(x, v.col(i)) * v.col(i);
    const double norm = std::sqrt(inner(x, x));
    if (!(norm > 1e-10 * start)) {
      throw RankDeficient("heat field basis: temporal vectors are linearly dependent at column " +
                          std::to_string(j));
    }
    v.col(j) = x / norm;
  }
  return v;
}

}  // namespace

HeatFieldBasis::HeatFieldBasis(Grid grid, std::size_t spatial_modes,
                               std::vector<double> save_times, double beta, double scale,
                               double power)
    : grid_(std::move(grid)),
      spatial_modes_(spatial_modes),
      save_times_(std::move(save_times)),
      beta_(beta) {
  if (grid_.dim() != 2 || grid_.layout() != GridLayout::closed) {
    throw InvalidGrid("heat field basis needs a closed 2D grid");
  }
  const std::size_t n = grid_.points_per_axis();
  if (spatial_modes_ < 1 || spatial_modes_ + 2 > n) {
    throw InvalidArgument("heat field basis: spatial modes must be in [1, N - 2]");
  }
  if (save_times_.empty()) throw InvalidArgument("heat field basis: no save times");
  if (!(beta >= 0.0) || !(scale > 0.0) || !(power > 0.0)) {
    throw InvalidArgument("heat field basis: need beta >= 0, scale > 0, power > 0");
  }
  const auto kk = static_cast<Eigen::Index>(spatial_modes_);
  const auto f = static_cast<Eigen::Index>(save_times_.size());
  const double axis_weight = std::sqrt(grid_.quadrature_weight());

  sines_.resize(static_cast<Eigen::Index>(n), kk);
  for (Eigen::Index k = 0; k < kk; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool edge = i == 0 || i + 1 == n;
      sines_(static_cast<Eigen::Index>(i), k) =
          edge ? 0.0 : std::sin(static_cast<double>(k + 1) * pi * (grid_.coordinate(0, i) + 1.0) / 2.0);
    }
    sines_.col(k) /= std::sqrt(axis_weight) * sines_.col(k).norm();
  }

  tau_ = time_weights(save_times_);
  const double span = save_times_.back() - save_times_.front();
  const double period = span > 0.0 ? span : 1.0;
  temporal_.reserve(static_cast<std::size_t>(kk * kk));
  for (Eigen::Index k = 1; k <= kk; ++k) {
    for (Eigen::Index l = 1; l <= kk; ++l) {
      const double rate = beta_ * pi * pi * static_cast<double>(k * k + l * l) / 4.0;
      Eigen::MatrixXd v(f, f);
      for (Eigen::Index r = 0; r < f; ++r) {
        const double s = save_times_[static_cast<std::size_t>(r)] - save_times_.front();
        v(r, 0) = std::exp(-rate * s);
        for (Eigen::Index j = 1; j < f; ++j) v(r, j) = std::cos(pi * static_cast<double>(j) * s / period);
      }
      temporal_.push_back(weighted_orthonormalize(std::move(v), tau_));
    }
  }

  std::vector<ModeIndex> all;
  std::vector<double> values;
  for (int k = 1; k <= static_cast<int>(kk); ++k)
    for (int l = 1; l <= static_cast<int>(kk); ++l)
      for (int j = 0; j < static_cast<int>(f); ++j) {
        all.push_back({k, l, j});
        const double symbol = scale + pi * pi * (k * k + l * l) / 4.0 +
                              (pi * j / period) * (pi * j / period);
        values.push_back(std::pow(symbol, -power));
      }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  eigenvalues_.resize(static_cast<Eigen::Index>(order.size()));
  modes_.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    eigenvalues_[static_cast<Eigen::Index>(i)] = values[order[i]];
    modes_.push_back(all[order[i]]);
  }
}

SpaceTimeField HeatFieldBasis::synthesize(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != eigenvalues_.size()) {
    throw DimensionMismatch("heat field basis: expected " + std::to_string(eigenvalues_.size()) +
                            " coefficients, got " + std::to_string(coeffs.size()));
  }
  const auto kk = static_cast<Eigen::Index>(spatial_modes_);
  const auto f = static_cast<Eigen::Index>(save_times_.size());
  const auto n = static_cast<Eigen::Index>(grid_.points_per_axis());
  // amplitude(f, k, l) = sum_j c_klj T_kl(f, j)
  std::vector<Eigen::MatrixXd> amp(static_cast<std::size_t>(f), Eigen::MatrixXd::Zero(kk, kk));
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const ModeIndex& m = modes_[i];
    const Eigen::MatrixXd& t = temporal_[static_cast<std::size_t>((m.k - 1) * kk + (m.l - 1))];
    const double c = coeffs[static_cast<Eigen::Index>(i)];
    for (Eigen::Index r = 0; r < f; ++r) amp[static_cast<std::size_t>(r)](m.k - 1, m.l - 1) += c * t(r, m.j);
  }
  SpaceTimeField out{Eigen::MatrixXd(f, n * n), save_times_, grid_.quadrature_weight()};
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (Eigen::Index r = 0; r < f; ++r) {
    const RowMajor u = sines_ * amp[static_cast<std::size_t>(r)] * sines_.transpose();
    out.frames.row(r) = Eigen::Map<const Eigen::RowVectorXd>(u.data(), n * n);
  }
  return out;
}

Eigen::VectorXd HeatFieldBasis::project(const SpaceTimeField& field) const {
  const auto kk = static_cast<Eigen::Index>(spatial_modes_);
  const auto f = static_cast<Eigen::Index>(save_times_.size());
  const auto n = static_cast<Eigen::Index>(grid_.points_per_axis());
  if (field.frames.rows() != f || field.frames.cols() != n * n) {
    throw ShapeMismatch("heat field basis: field shape does not match the basis");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const double w = grid_.quadrature_weight();
  std::vector<Eigen::MatrixXd> amp(static_cast<std::size_t>(f));
  for (Eigen::Index r = 0; r < f; ++r) {
    const Eigen::RowVectorXd frame = field.frames.row(r);
    const Eigen::Map<const RowMajor> u(frame.data(), n, n);
    amp[static_cast<std::size_t>(r)] = w * (sines_.transpose() * u * sines_);
  }
  Eigen::VectorXd out(eigenvalues_.size());
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const ModeIndex& m = modes_[i];
    const Eigen::MatrixXd& t = temporal_[static_cast<std::size_t>((m.k - 1) * kk + (m.l - 1))];
    double acc = 0.0;
    for (Eigen::Index r = 0; r < f; ++r) acc += tau_[r] * t(r, m.j) * amp[static_cast<std::size_t>(r)](m.k - 1, m.l - 1);
    out[static_cast<Eigen::Index>(i)] = acc;
  }
  return out;
}

double HeatFieldBasis::profile_norm(int k, int l) const {
  const auto kk = static_cast<int>(spatial_modes_);
  if (k < 1 || l < 1 || k > kk || l > kk) throw OutOfRange("profile_norm: mode out of range");
  const double rate = beta_ * pi * pi * (k * k + l * l) / 4.0;
  double time_norm2 = 0.0;
  for (std::size_t r = 0; r < save_times_.size(); ++r) {
    const double e = std::exp(-rate * (save_times_[r] - save_times_.front()));
    time_norm2 += tau_[static_cast<Eigen::Index>(r)] * e * e;
  }
  // A unit-amplitude sine is a multiple of the normalized one.
  const std::size_t n = grid_.points_per_axis();
  const double axis_weight = std::sqrt(grid_.quadrature_weight());
  auto sine_norm = [&](int freq) {
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double s = std::sin(freq * pi * (grid_.coordinate(0, i) + 1.0) / 2.0);
      acc += s * s;
    }
    return std::sqrt(axis_weight * acc);
  };
  return sine_norm(k) * sine_norm(l) * std::sqrt(time_norm2);
}

}  // namespace pfode
