#include "pfode/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "pfode/csv.hpp"
#include "pfode/errors.hpp"
#include "pfode/kernels.hpp"
#include "pfode/rng.hpp"

namespace pfode {

void RbfKernelSpec::validate() const {
  if (!(gain > 0.0) || !(len > 0.0)) throw InvalidArgument("rbf kernel needs gain > 0 and len > 0");
}

void BesselPriorSpec::validate() const {
  if (!(scale > 0.0) || !(power >= 0.0)) {
    throw InvalidArgument("bessel prior needs scale > 0 and power >= 0");
  }
}

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors,
                             double weight, std::optional<Grid> grid)
    : eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      weight_(weight),
      grid_(std::move(grid)) {
  if (eigenvectors_.cols() != eigenvalues_.size()) {
    throw DimensionMismatch("basis: eigenvector count does not match eigenvalue count");
  }
  if (eigenvalues_.size() > eigenvectors_.rows()) {
    throw DimensionMismatch("basis: truncation exceeds number of grid points");
  }
  if (!(weight_ > 0.0)) throw InvalidArgument("basis: quadrature weight must be positive");
  for (Eigen::Index n = 0; n < eigenvalues_.size(); ++n) {
    if (!(eigenvalues_[n] >= 0.0)) throw InvalidArgument("basis: eigenvalues must be >= 0");
    if (n > 0 && eigenvalues_[n] > eigenvalues_[n - 1]) {
      throw InvalidArgument("basis: eigenvalues must be nonincreasing");
    }
  }
  if (grid_ && grid_->total_points() != points()) {
    throw DimensionMismatch("basis: grid size does not match eigenvector length");
  }
}

SpectralBasis SpectralBasis::truncated(std::size_t m) const {
  if (m > truncation()) throw DimensionMismatch("basis: cannot extend truncation");
  const auto mm = static_cast<Eigen::Index>(m);
  return SpectralBasis(eigenvalues_.head(mm), eigenvectors_.leftCols(mm), weight_, grid_);
}

SpectralBasis SpectralBasis::with_eigenvalues(Eigen::VectorXd eigenvalues) const {
  return SpectralBasis(std::move(eigenvalues), eigenvectors_, weight_, grid_);
}

std::uint64_t SpectralBasis::fingerprint() const {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(eigenvalues_.size()));
  auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof v);
    h = splitmix64(h ^ bits);
  };
  mix(weight_);
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) mix(eigenvalues_[i]);
  for (Eigen::Index i = 0; i < eigenvectors_.size(); ++i) mix(eigenvectors_.data()[i]);
  return h;
}

Eigen::MatrixXd rbf_gram(const Grid& grid, const RbfKernelSpec& spec, Exec exec) {
  if (grid.dim() != 1) throw InvalidGrid("rbf_gram requires a 1D grid");
  spec.validate();
  std::vector<double> x(grid.points_per_axis());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid.coordinate(0, i);
  Eigen::MatrixXd k;
  kernels::rbf_gram(x, spec.gain, spec.len, k, exec);
  return k;
}

SpectralBasis eigendecompose(const Eigen::MatrixXd& op, std::size_t truncation, double weight) {
  const Eigen::Index p = op.rows();
  if (op.cols() != p) throw DimensionMismatch("eigendecompose: matrix must be square");
  if (truncation > static_cast<std::size_t>(p)) {
    throw DimensionMismatch("eigendecompose: truncation exceeds matrix size");
  }
  const double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
  if ((op - op.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("eigendecompose: matrix must be symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  if (solver.info() != Eigen::Success) {
    throw NonConvergence("eigendecompose: symmetric eigensolver did not converge");
  }

  // Eigen returns ascending order; take the top `truncation` in descending order.
  const auto m = static_cast<Eigen::Index>(truncation);
  Eigen::VectorXd values(m);
  Eigen::MatrixXd vectors(p, m);
  for (Eigen::Index n = 0; n < m; ++n) {
    const Eigen::Index src = p - 1 - n;
    values[n] = std::max(0.0, solver.eigenvalues()[src]);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index pivot;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v[pivot] < 0.0) v = -v;
    vectors.col(n) = v;
  }

  // Residual check against the solver's own pairs before clamping.
  const double tol = 1e-10 * std::max(1.0, op.norm());
  for (Eigen::Index n = 0; n < m; ++n) {
    const double mu = solver.eigenvalues()[p - 1 - n];
    const double r = (op * vectors.col(n) - mu * vectors.col(n)).norm();
    if (!(r <= tol)) {
      throw NonConvergence("eigendecompose: residual " + std::to_string(r) +
                           " exceeds tolerance for mode " + std::to_string(n));
    }
  }

  vectors /= std::sqrt(weight);
  return SpectralBasis(std::move(values), std::move(vectors), weight);
}

SpectralBasis rbf_basis(const Grid& grid, const RbfKernelSpec& spec, std::size_t truncation) {
  const double w = grid.quadrature_weight();
  Eigen::MatrixXd op = w * rbf_gram(grid, spec);
  SpectralBasis b = eigendecompose(op, truncation, w);
  return SpectralBasis(b.eigenvalues(), b.eigenvectors(), w, grid);
}

double laplacian_symbol(const Grid& grid, int axis, std::size_t frequency) {
  const auto n = static_cast<double>(grid.points_per_axis());
  const double inv_h = n / grid.bounds(axis).length();
  const double theta = 2.0 * std::numbers::pi * static_cast<double>(frequency) / n;
  return (2.0 - 2.0 * std::cos(theta)) * inv_h * inv_h;
}

double bessel_eigenvalue(const Grid& grid, const BesselPriorSpec& spec, std::size_t k1,
                         std::size_t k2) {
  return std::pow(spec.scale + laplacian_symbol(grid, 0, k1) + laplacian_symbol(grid, 1, k2),
                  -spec.power);
}

namespace {

/// 1D real Fourier vector number `idx` on n periodic points: 0 is constant,
/// then (cos, sin) pairs for 1 <= f < n/2, and the alternating Nyquist mode.
struct RealFourierMode {
  std::size_t frequency;
  bool is_sine;
};

RealFourierMode real_fourier_mode(std::size_t idx, std::size_t n) {
  if (idx == 0) return {0, false};
  if (idx == n - 1) return {n / 2, false};
  return {(idx + 1) / 2, idx % 2 == 0};
}

double real_fourier_value(RealFourierMode mode, std::size_t i, std::size_t n) {
  const double theta = 2.0 * std::numbers::pi * static_cast<double>(mode.frequency * i % n) /
                       static_cast<double>(n);
  return mode.is_sine ? std::sin(theta) : std::cos(theta);
}

double real_fourier_norm2(RealFourierMode mode, std::size_t n) {
  const bool flat = mode.frequency == 0 || 2 * mode.frequency == n;
  return flat ? static_cast<double>(n) : static_cast<double>(n) / 2.0;
}

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

SpectralBasis bessel_basis(const Grid& grid, const BesselPriorSpec& spec, std::size_t truncation) {
  if (grid.dim() != 2) throw InvalidGrid("bessel_basis requires a 2D grid");
  if (grid.layout() != GridLayout::periodic) throw InvalidGrid("bessel_basis requires a periodic grid");
  const std::size_t n = grid.points_per_axis();
  if (!is_power_of_two(n)) {
    throw InvalidGrid("bessel_basis: points_per_axis must be a power of two, got " +
                      std::to_string(n));
  }
  spec.validate();
  const std::size_t p = n * n;
  if (truncation > p) throw DimensionMismatch("bessel_basis: truncation exceeds grid size");

  std::vector<double> lambda(p);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      lambda[a * n + b] = bessel_eigenvalue(grid, spec, real_fourier_mode(a, n).frequency,
                                            real_fourier_mode(b, n).frequency);

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return lambda[i] > lambda[j]; });

  const double w = grid.quadrature_weight();
  const auto m = static_cast<Eigen::Index>(truncation);
  Eigen::VectorXd values(m);
  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(p), m);
  for (Eigen::Index col = 0; col < m; ++col) {
    const std::size_t flat = order[static_cast<std::size_t>(col)];
    const RealFourierMode ma = real_fourier_mode(flat / n, n);
    const RealFourierMode mb = real_fourier_mode(flat % n, n);
    const double norm = std::sqrt(w * real_fourier_norm2(ma, n) * real_fourier_norm2(mb, n));
    values[col] = lambda[flat];
    for (std::size_t i = 0; i < n; ++i) {
      const double ui = real_fourier_value(ma, i, n);
      for (std::size_t j = 0; j < n; ++j) {
        vectors(static_cast<Eigen::Index>(i * n + j), col) = ui * real_fourier_value(mb, j, n) / norm;
      }
    }
  }
  return SpectralBasis(std::move(values), std::move(vectors), w, grid);
}

Eigen::MatrixXd sample_prior_coeffs(const Eigen::VectorXd& eigenvalues, std::size_t count,
                                    std::uint64_t seed) {
  const Eigen::Index m = eigenvalues.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m);
  const Eigen::VectorXd sd = eigenvalues.cwiseSqrt();
  const std::uint64_t stream = derive_seed(seed, kPriorStream);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = substream(stream, i);
    std::normal_distribution<double> normal;
    for (Eigen::Index n = 0; n < m; ++n) out(static_cast<Eigen::Index>(i), n) = sd[n] * normal(rng);
  }
  return out;
}

std::vector<FunctionSample> sample_noise(const SpectralBasis& basis, std::size_t count,
                                         std::uint64_t seed) {
  const Eigen::MatrixXd coeffs = sample_prior_coeffs(basis.eigenvalues(), count, seed);
  std::vector<FunctionSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd c = coeffs.row(static_cast<Eigen::Index>(i)).transpose();
    Eigen::VectorXd g = from_coeffs(c, basis);
    out.push_back({std::move(c), std::move(g)});
  }
  return out;
}

Eigen::VectorXd to_coeffs(const Eigen::VectorXd& grid_values, const SpectralBasis& basis) {
  if (static_cast<std::size_t>(grid_values.size()) != basis.points()) {
    throw DimensionMismatch("to_coeffs: expected " + std::to_string(basis.points()) +
                            " grid values, got " + std::to_string(grid_values.size()));
  }
  return basis.quadrature_weight() * (basis.eigenvectors().transpose() * grid_values);
}

Eigen::VectorXd from_coeffs(const Eigen::VectorXd& coeffs, const SpectralBasis& basis) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.truncation()) {
    throw DimensionMismatch("from_coeffs: expected " + std::to_string(basis.truncation()) +
                            " coefficients, got " + std::to_string(coeffs.size()));
  }
  return basis.eigenvectors() * coeffs;
}

double cameron_martin_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                            const Eigen::VectorXd& eigenvalues) {
  if (f.size() != eigenvalues.size() || g.size() != eigenvalues.size()) {
    throw DimensionMismatch("cameron_martin_inner: coefficient length mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index n = 0; n < eigenvalues.size(); ++n) {
    if (eigenvalues[n] > 0.0) {
      acc += f[n] * g[n] / eigenvalues[n];
    } else if (f[n] != 0.0 || g[n] != 0.0) {
      throw NotInCameronMartin("cameron_martin_inner: nonzero coefficient on zero eigenvalue (mode " +
                               std::to_string(n) + ")");
    }
  }
  return acc;
}

double cameron_martin_inner(const FunctionSample& f, const FunctionSample& g,
                            const SpectralBasis& basis) {
  return cameron_martin_inner(f.coeffs, g.coeffs, basis.eigenvalues());
}

void write_coeff_csv(std::ostream& os, const Eigen::MatrixXd& rows) {
  std::vector<std::string> header{"sample_id"};
  for (Eigen::Index n = 0; n < rows.cols(); ++n) header.push_back("mode_" + std::to_string(n));
  csv::write_row(os, header);
  std::vector<std::string> cells;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    cells.assign(1, std::to_string(i));
    for (Eigen::Index n = 0; n < rows.cols(); ++n) cells.push_back(csv::format(rows(i, n)));
    csv::write_row(os, cells);
  }
}

void write_grid_csv(std::ostream& os, const std::vector<FunctionSample>& samples) {
  csv::write_row(os, {"sample_id", "idx", "value"});
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (!samples[s].grid_values) continue;
    const Eigen::VectorXd& g = *samples[s].grid_values;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      csv::write_row(os, {std::to_string(s), std::to_string(i), csv::format(g[i])});
    }
  }
}

void write_basis_csv(std::ostream& os, const Eigen::VectorXd& eigenvalues) {
  csv::write_row(os, {"mode", "eigenvalue"});
  for (Eigen::Index n = 0; n < eigenvalues.size(); ++n) {
    csv::write_row(os, {std::to_string(n), csv::format(eigenvalues[n])});
  }
}

}  // namespace pfode
