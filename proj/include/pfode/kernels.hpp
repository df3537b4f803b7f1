#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version with identical per-element arithmetic, so the two agree
// bit for bit; `Exec` picks one at the call site.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>

#include "pfode/exec.hpp"

namespace pfode {

enum class BoundaryCondition { dirichlet, neumann };

namespace kernels {

/// out[i][j] = gain * exp(-(x_i - x_j)^2 / len^2)
void rbf_gram(std::span<const double> x, double gain, double len, Eigen::MatrixXd& out,
              Exec exec);

/// One forward-time centered-space step of u_t = beta * Laplacian(u) on an
/// n x n row-major grid. rx = beta dt / dx^2, ry = beta dt / dy^2.
/// Dirichlet keeps boundary nodes at zero; Neumann mirrors the interior
/// neighbour across the boundary.
void heat_step(std::span<const double> in, std::span<double> out, std::size_t n, double rx,
               double ry, BoundaryCondition bc, Exec exec);

/// Gram matrix of exp(-|x_i - x_j|^2 / (2 h^2)) over the rows of `x`.
void sq_exp_gram(const Eigen::MatrixXd& x, double bandwidth, Eigen::MatrixXd& out, Exec exec);

/// Runs body(i) for i in [0, count). Bodies must only write to slot i.
void for_each_index(std::size_t count, Exec exec, const std::function<void(std::size_t)>& body);

namespace serial {
void rbf_gram(std::span<const double> x, double gain, double len, Eigen::MatrixXd& out);
void heat_step(std::span<const double> in, std::span<double> out, std::size_t n, double rx,
               double ry, BoundaryCondition bc);
void sq_exp_gram(const Eigen::MatrixXd& x, double bandwidth, Eigen::MatrixXd& out);
}  // namespace serial

namespace omp {
void rbf_gram(std::span<const double> x, double gain, double len, Eigen::MatrixXd& out);
void heat_step(std::span<const double> in, std::span<double> out, std::size_t n, double rx,
               double ry, BoundaryCondition bc);
void sq_exp_gram(const Eigen::MatrixXd& x, double bandwidth, Eigen::MatrixXd& out);
}  // namespace omp

}  // namespace kernels
}  // namespace pfode
