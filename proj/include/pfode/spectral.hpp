#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pfode/exec.hpp"
#include "pfode/grid.hpp"

namespace pfode {

/// k(x, y) = gain * exp(-|x - y|^2 / len^2)
struct RbfKernelSpec {
  double gain = 1.0;
  double len = 0.8;
  void validate() const;
};

/// Gaussian measure N(0, (scale - Laplacian)^(-power)) on a periodic grid.
struct BesselPriorSpec {
  double scale = 8.0;
  double power = 0.55;
  void validate() const;
};

/// Truncated eigensystem of a covariance operator Q on a grid.
///
/// Eigenvectors are stored as columns (P x M) and are orthonormal under the
/// weighted inner product <f, g>_w = w * sum_i f_i g_i, so that coefficient
/// space is an isometric copy of the L2 span of the retained modes.
/// Eigenvalues are nonincreasing and nonnegative.
class SpectralBasis {
 public:
  SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors, double weight,
                std::optional<Grid> grid = std::nullopt);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double quadrature_weight() const { return weight_; }
  std::size_t truncation() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  std::size_t points() const { return static_cast<std::size_t>(eigenvectors_.rows()); }
  const std::optional<Grid>& grid() const { return grid_; }

  /// Keeps the leading `m` modes.
  SpectralBasis truncated(std::size_t m) const;
  /// Same eigenfunctions, replaced spectrum (must stay sorted and nonnegative).
  SpectralBasis with_eigenvalues(Eigen::VectorXd eigenvalues) const;

  /// Stable 64-bit fingerprint of the spectrum and eigenvectors.
  std::uint64_t fingerprint() const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double weight_;
  std::optional<Grid> grid_;
};

/// A function in spectral coordinates, optionally with its grid values.
struct FunctionSample {
  Eigen::VectorXd coeffs;
  std::optional<Eigen::VectorXd> grid_values;
};

Eigen::MatrixXd rbf_gram(const Grid& grid, const RbfKernelSpec& spec, Exec exec = Exec::parallel);

/// Eigenpairs of a symmetric operator matrix, sorted by descending eigenvalue
/// with negative values clamped to zero. `weight` only sets the eigenvector
/// normalization; the eigenvalues are those of `op` itself.
SpectralBasis eigendecompose(const Eigen::MatrixXd& op, std::size_t truncation,
                             double weight = 1.0);

/// Nystrom discretization of the RBF integral operator: eigendecomposes
/// w * K so that eigenvalues approximate those of Q on L2 and sampled grid
/// values have covariance K.
SpectralBasis rbf_basis(const Grid& grid, const RbfKernelSpec& spec, std::size_t truncation);

/// Periodic discrete Laplacian symbol (2 - 2 cos(2 pi k / N)) (N / L)^2.
double laplacian_symbol(const Grid& grid, int axis, std::size_t frequency);
double bessel_eigenvalue(const Grid& grid, const BesselPriorSpec& spec, std::size_t k1,
                         std::size_t k2);
/// Real Fourier eigenbasis of the Bessel prior on a periodic power-of-two grid.
SpectralBasis bessel_basis(const Grid& grid, const BesselPriorSpec& spec,
                           std::size_t truncation);

/// Rows are independent draws of N(0, diag(eigenvalues)). Row i uses its own
/// substream, and modes are drawn in order, so any prefix of modes is
/// unaffected by the truncation level.
Eigen::MatrixXd sample_prior_coeffs(const Eigen::VectorXd& eigenvalues, std::size_t count,
                                    std::uint64_t seed);
std::vector<FunctionSample> sample_noise(const SpectralBasis& basis, std::size_t count,
                                         std::uint64_t seed);

Eigen::VectorXd to_coeffs(const Eigen::VectorXd& grid_values, const SpectralBasis& basis);
Eigen::VectorXd from_coeffs(const Eigen::VectorXd& coeffs, const SpectralBasis& basis);

double cameron_martin_inner(const Eigen::VectorXd& f_coeffs, const Eigen::VectorXd& g_coeffs,
                            const Eigen::VectorXd& eigenvalues);
double cameron_martin_inner(const FunctionSample& f, const FunctionSample& g,
                            const SpectralBasis& basis);

// CSV exports: `sample_id,mode_0,...`, `sample_id,idx,value`, `mode,eigenvalue`.
void write_coeff_csv(std::ostream& os, const Eigen::MatrixXd& rows);
void write_grid_csv(std::ostream& os, const std::vector<FunctionSample>& samples);
void write_basis_csv(std::ostream& os, const Eigen::VectorXd& eigenvalues);

}  // namespace pfode
