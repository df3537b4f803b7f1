#include "pfode/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <exception>

namespace pfode {

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

namespace kernels {
namespace {

inline double rbf_entry(double xi, double xj, double gain, double inv_len2) {
  const double d = xi - xj;
  return gain * std::exp(-d * d * inv_len2);
}

inline double heat_node(std::span<const double> u, std::size_t n, std::size_t i, std::size_t j,
                        double rx, double ry, BoundaryCondition bc) {
  const bool edge = i == 0 || j == 0 || i == n - 1 || j == n - 1;
  if (edge && bc == BoundaryCondition::dirichlet) return 0.0;
  const std::size_t up = i == 0 ? 1 : i - 1;
  const std::size_t down = i == n - 1 ? n - 2 : i + 1;
  const std::size_t left = j == 0 ? 1 : j - 1;
  const std::size_t right = j == n - 1 ? n - 2 : j + 1;
  const double c = u[i * n + j];
  return c + rx * (u[up * n + j] - 2.0 * c + u[down * n + j]) +
         ry * (u[i * n + left] - 2.0 * c + u[i * n + right]);
}

inline double sq_exp_entry(const Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j,
                           double inv_two_h2) {
  double d2 = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double d = x(i, k) - x(j, k);
    d2 += d * d;
  }
  return std::exp(-d2 * inv_two_h2);
}

}  // namespace

namespace serial {

void rbf_gram(std::span<const double> x, double gain, double len, Eigen::MatrixXd& out) {
  const auto p = static_cast<Eigen::Index>(x.size());
  out.resize(p, p);
  const double inv_len2 = 1.0 / (len * len);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < p; ++i) out(i, j) = rbf_entry(x[i], x[j], gain, inv_len2);
}

void heat_step(std::span<const double> in, std::span<double> out, std::size_t n, double rx,
               double ry, BoundaryCondition bc) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = heat_node(in, n, i, j, rx, ry, bc);
}

void sq_exp_gram(const Eigen::MatrixXd& x, double bandwidth, Eigen::MatrixXd& out) {
  const Eigen::Index n = x.rows();
  out.resize(n, n);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = sq_exp_entry(x, i, j, inv);
}

}  // namespace serial

namespace omp {

void rbf_gram(std::span<const double> x, double gain, double len, Eigen::MatrixXd& out) {
  const auto p = static_cast<Eigen::Index>(x.size());
  out.resize(p, p);
  const double inv_len2 = 1.0 / (len * len);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < p; ++i) out(i, j) = rbf_entry(x[i], x[j], gain, inv_len2);
}

void heat_step(std::span<const double> in, std::span<double> out, std::size_t n, double rx,
               double ry, BoundaryCondition bc) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto ii = static_cast<std::size_t>(i);
      out[ii * n + j] = heat_node(in, n, ii, j, rx, ry, bc);
    }
}

void sq_exp_gram(const Eigen::MatrixXd& x, double bandwidth, Eigen::MatrixXd& out) {
  const Eigen::Index n = x.rows();
  out.resize(n, n);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = sq_exp_entry(x, i, j, inv);
}

}  // namespace omp

void rbf_gram(std::span<const double> x, double gain, double len, Eigen::MatrixXd& out,
              Exec exec) {
  exec == Exec::parallel ? omp::rbf_gram(x, gain, len, out) : serial::rbf_gram(x, gain, len, out);
}

void heat_step(std::span<const double> in, std::span<double> out, std::size_t n, double rx,
               double ry, BoundaryCondition bc, Exec exec) {
  exec == Exec::parallel ? omp::heat_step(in, out, n, rx, ry, bc)
                         : serial::heat_step(in, out, n, rx, ry, bc);
}

void sq_exp_gram(const Eigen::MatrixXd& x, double bandwidth, Eigen::MatrixXd& out, Exec exec) {
  exec == Exec::parallel ? omp::sq_exp_gram(x, bandwidth, out)
                         : serial::sq_exp_gram(x, bandwidth, out);
}

void for_each_index(std::size_t count, Exec exec, const std::function<void(std::size_t)>& body) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  // Exceptions cannot cross the parallel region; keep the lowest-index one.
  const auto n = static_cast<std::ptrdiff_t>(count);
  std::exception_ptr first_error;
  std::ptrdiff_t first_index = n;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(pfode_for_each_error)
      if (i < first_index) {
        first_index = i;
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace kernels
}  // namespace pfode
