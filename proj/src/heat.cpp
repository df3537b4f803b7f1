#include "pfode/heat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "pfode/csv.hpp"
#include "pfode/errors.hpp"
#include "pfode/rng.hpp"

namespace pfode {

using std::numbers::pi;

double HeatProblem::cfl_number() const {
  const double dx = grid.spacing(0);
  const double dy = grid.spacing(1);
  return beta * dt * (1.0 / (dx * dx) + 1.0 / (dy * dy));
}

void HeatProblem::validate() const {
  if (grid.dim() != 2 || grid.layout() != GridLayout::closed) {
    throw InvalidGrid("heat problem needs a closed 2D grid");
  }
  if (!(beta > 0.0)) throw InvalidArgument("heat problem: beta must be > 0");
  if (!(t_end > 0.0)) throw InvalidArgument("heat problem: t_end must be > 0");
  if (!(dt > 0.0)) throw InvalidArgument("heat problem: dt must be > 0");
  const double c = cfl_number();
  if (c > 0.5) {
    throw CflViolation("heat problem: beta dt (1/dx^2 + 1/dy^2) = " + std::to_string(c) +
                       " exceeds 1/2");
  }
}

double HeatProblem::stable_dt(const Grid& grid, double beta, double safety) {
  const double dx = grid.spacing(0);
  const double dy = grid.spacing(1);
  return safety * 0.5 / (beta * (1.0 / (dx * dx) + 1.0 / (dy * dy)));
}

void SpaceTimeField::validate() const {
  if (static_cast<std::size_t>(frames.rows()) != save_times.size()) {
    throw ShapeMismatch("space-time field: frame count differs from save time count");
  }
  for (std::size_t f = 1; f < save_times.size(); ++f) {
    if (!(save_times[f] > save_times[f - 1])) {
      throw InvalidArgument("space-time field: save times must increase");
    }
  }
  if (!frames.allFinite()) throw NonFiniteState("space-time field: non-finite value");
}

std::vector<SineTerm> draw_sine_terms(std::size_t n_terms, std::uint64_t seed) {
  if (n_terms < 1) throw InvalidArgument("sine mixture: n_terms must be >= 1");
  Rng rng(derive_seed(seed, kDataStream));
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> freq(1, 4);
  std::vector<SineTerm> terms;
  terms.reserve(n_terms);
  for (std::size_t j = 0; j < n_terms; ++j) {
    const double a = normal(rng);
    const int k = freq(rng);
    const int l = freq(rng);
    terms.push_back({a, k, l});
  }
  return terms;
}

Eigen::VectorXd sine_field(const Grid& grid, const std::vector<SineTerm>& terms, double beta,
                           double t) {
  if (grid.dim() != 2) throw InvalidGrid("sine_field needs a 2D grid");
  const std::size_t n = grid.points_per_axis();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n * n));
  for (const SineTerm& term : terms) {
    const double decay = std::exp(-beta * pi * pi * (term.k * term.k + term.l * term.l) * t / 4.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double sx = std::sin(term.k * pi * (grid.coordinate(0, i) + 1.0) / 2.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double sy = std::sin(term.l * pi * (grid.coordinate(1, j) + 1.0) / 2.0);
        f[static_cast<Eigen::Index>(i * n + j)] += term.amplitude * decay * sx * sy;
      }
    }
  }
  // Boundary nodes are zero analytically; drop the rounding residue of sin(k pi).
  for (std::size_t i = 0; i < n; ++i) {
    f[static_cast<Eigen::Index>(i)] = 0.0;
    f[static_cast<Eigen::Index>((n - 1) * n + i)] = 0.0;
    f[static_cast<Eigen::Index>(i * n)] = 0.0;
    f[static_cast<Eigen::Index>(i * n + n - 1)] = 0.0;
  }
  return f;
}

Eigen::VectorXd sine_mixture_ic(const Grid& grid, std::size_t n_terms, std::uint64_t seed) {
  return sine_field(grid, draw_sine_terms(n_terms, seed));
}

SpaceTimeField heat_solve(const HeatProblem& problem, const Eigen::VectorXd& ic,
                          const std::vector<double>& save_times) {
  problem.validate();
  const std::size_t n = problem.grid.points_per_axis();
  if (static_cast<std::size_t>(ic.size()) != n * n) {
    throw DimensionMismatch("heat_solve: initial condition has " + std::to_string(ic.size()) +
                            " values, grid has " + std::to_string(n * n));
  }
  if (!ic.allFinite()) throw InvalidArgument("heat_solve: initial condition is not finite");
  for (std::size_t f = 0; f < save_times.size(); ++f) {
    if (save_times[f] < 0.0 || (f > 0 && !(save_times[f] > save_times[f - 1]))) {
      throw InvalidArgument("heat_solve: save times must be nonnegative and increasing");
    }
  }

  const double inv_dx2 = 1.0 / (problem.grid.spacing(0) * problem.grid.spacing(0));
  const double inv_dy2 = 1.0 / (problem.grid.spacing(1) * problem.grid.spacing(1));
  SpaceTimeField out{Eigen::MatrixXd(static_cast<Eigen::Index>(save_times.size()), ic.size()),
                     save_times, problem.grid.quadrature_weight()};
  Eigen::VectorXd u = ic;
  Eigen::VectorXd next(ic.size());
  double t = 0.0;
  for (std::size_t f = 0; f < save_times.size(); ++f) {
    const double target = save_times[f];
    while (target - t > 1e-12 * problem.dt) {
      const double h = std::min(problem.dt, target - t);
      kernels::heat_step(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                         std::span<double>(next.data(), static_cast<std::size_t>(next.size())), n,
                         problem.beta * h * inv_dx2, problem.beta * h * inv_dy2, problem.bc,
                         problem.exec);
      u.swap(next);
      t = h == problem.dt ? t + h : target;
    }
    out.frames.row(static_cast<Eigen::Index>(f)) = u.transpose();
  }
  return out;
}

Eigen::VectorXd time_weights(const std::vector<double>& save_times) {
  const auto f = static_cast<Eigen::Index>(save_times.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(f);
  if (f == 1) {
    w[0] = 1.0;
    return w;
  }
  for (Eigen::Index i = 0; i + 1 < f; ++i) {
    const double half = 0.5 * (save_times[static_cast<std::size_t>(i + 1)] -
                               save_times[static_cast<std::size_t>(i)]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

double lp_distance(const SpaceTimeField& a, const SpaceTimeField& b, Norm p) {
  if (a.frames.rows() != b.frames.rows() || a.frames.cols() != b.frames.cols() ||
      a.save_times != b.save_times) {
    throw ShapeMismatch("lp_distance: fields differ in shape or save times");
  }
  if (p == Norm::linf) {
    return a.frames.size() == 0 ? 0.0 : (a.frames - b.frames).cwiseAbs().maxCoeff();
  }
  const Eigen::VectorXd tau = time_weights(a.save_times);
  double acc = 0.0;
  for (Eigen::Index f = 0; f < a.frames.rows(); ++f) {
    acc += tau[f] * a.cell_weight * (a.frames.row(f) - b.frames.row(f)).squaredNorm();
  }
  return std::sqrt(acc);
}

SpaceTimeField regenerate_ground_truth(const SpaceTimeField& u_synt, const HeatProblem& problem) {
  if (u_synt.frames.rows() == 0) throw InvalidArgument("regenerate_ground_truth: no frames");
  // The initial frame sits at the first save time; solve forward from there.
  const double t0 = u_synt.save_times.front();
  std::vector<double> shifted(u_synt.save_times.size());
  for (std::size_t f = 0; f < shifted.size(); ++f) shifted[f] = u_synt.save_times[f] - t0;
  SpaceTimeField out = heat_solve(problem, u_synt.frames.row(0).transpose(), shifted);
  out.save_times = u_synt.save_times;
  return out;
}

std::vector<double> uniform_save_times(double t_end, std::size_t frames) {
  if (frames < 1) throw InvalidArgument("uniform_save_times: need at least one frame");
  std::vector<double> t(frames, 0.0);
  for (std::size_t f = 1; f < frames; ++f) {
    t[f] = t_end * static_cast<double>(f) / static_cast<double>(frames - 1);
  }
  return t;
}

void write_field_csv(std::ostream& os, const SpaceTimeField& field) {
  const auto p = static_cast<std::size_t>(field.frames.cols());
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(p))));
  if (n * n != p) throw ShapeMismatch("write_field_csv: frame is not a square grid");
  csv::write_row(os, {"frame", "row", "col", "value"});
  for (Eigen::Index f = 0; f < field.frames.rows(); ++f)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        csv::write_row(os, {std::to_string(f), std::to_string(i), std::to_string(j),
                            csv::format(field.frames(f, static_cast<Eigen::Index>(i * n + j)))});
}

}  // namespace pfode
