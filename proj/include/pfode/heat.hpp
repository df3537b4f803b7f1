#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pfode/exec.hpp"
#include "pfode/grid.hpp"
#include "pfode/kernels.hpp"

namespace pfode {

/// u_t = beta * Laplacian(u) on a closed square grid, explicit FTCS.
struct HeatProblem {
  double beta = 0.05;
  Grid grid = Grid::square(64, {-1.0, 1.0}, {-1.0, 1.0});
  double t_end = 1.0;
  double dt = 1e-3;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  Exec exec = Exec::parallel;

  /// beta dt (1/dx^2 + 1/dy^2); explicit stepping is stable for <= 1/2.
  double cfl_number() const;
  void validate() const;
  /// Largest dt with cfl_number() <= safety / 2.
  static double stable_dt(const Grid& grid, double beta, double safety = 0.9);
};

/// Frames (one row per saved time) of a field on a grid with uniform cell
/// weight.
struct SpaceTimeField {
  Eigen::MatrixXd frames;
  std::vector<double> save_times;
  double cell_weight = 1.0;

  std::size_t frame_count() const { return save_times.size(); }
  void validate() const;
};

struct SineTerm {
  double amplitude;
  int k;
  int l;
};

/// n_terms terms with amplitudes N(0, 1) and frequencies uniform on {1..4}.
std::vector<SineTerm> draw_sine_terms(std::size_t n_terms, std::uint64_t seed);
/// sum_j A_j sin(k_j pi (x + 1) / 2) sin(l_j pi (y + 1) / 2), times
/// exp(-beta pi^2 (k^2 + l^2) t / 4) per term (the Dirichlet heat solution).
Eigen::VectorXd sine_field(const Grid& grid, const std::vector<SineTerm>& terms, double beta = 0.0,
                           double t = 0.0);
Eigen::VectorXd sine_mixture_ic(const Grid& grid, std::size_t n_terms, std::uint64_t seed);

/// Saves the initial condition at t = 0 when requested. Steps that would
/// overshoot a save time are shortened to land on it.
SpaceTimeField heat_solve(const HeatProblem& problem, const Eigen::VectorXd& ic,
                          const std::vector<double>& save_times);

enum class Norm { l2, linf };

/// L2: sqrt(sum_f tau_f sum_i w (a - b)^2) with trapezoid weights tau_f over
/// the save times (a single frame gets weight 1). Linf: max |a - b|.
double lp_distance(const SpaceTimeField& a, const SpaceTimeField& b, Norm p);

/// Trapezoid weights over the save times; one frame gets weight 1.
Eigen::VectorXd time_weights(const std::vector<double>& save_times);

/// Re-solves the heat equation from the first frame of `u_synt` at its save times.
SpaceTimeField regenerate_ground_truth(const SpaceTimeField& u_synt, const HeatProblem& problem);

std::vector<double> uniform_save_times(double t_end, std::size_t frames);

/// `frame,row,col,value`.
void write_field_csv(std::ostream& os, const SpaceTimeField& field);

/// Space-time Gaussian generator for heat-eval. Spatial factor: Dirichlet
/// sine modes (k, l) = 1..K on the grid. Temporal factor, per (k, l): an
/// orthonormal basis of the frame vectors whose first member is the heat
/// decay profile exp(-beta pi^2 (k^2 + l^2) t / 4) and the rest come from
/// Gram-Schmidt on cos(pi j t / T). Eigenvalue of mode (k, l, j):
/// (scale + pi^2 (k^2 + l^2) / 4 + (pi j / T)^2)^(-power).
class HeatFieldBasis {
 public:
  HeatFieldBasis(Grid grid, std::size_t spatial_modes, std::vector<double> save_times,
                 double beta, double scale, double power);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  std::size_t truncation() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& save_times() const { return save_times_; }

  /// Mode index of (k, l, j), 1-based k, l and 0-based j.
  struct ModeIndex {
    int k;
    int l;
    int j;
  };
  const std::vector<ModeIndex>& mode_table() const { return modes_; }

  SpaceTimeField synthesize(const Eigen::VectorXd& coeffs) const;
  /// Weighted projection of a field onto the retained modes.
  Eigen::VectorXd project(const SpaceTimeField& field) const;
  /// Time-weighted norm of the decay profile of (k, l), i.e. the coefficient
  /// of a unit-amplitude heat solution on mode (k, l, 0).
  double profile_norm(int k, int l) const;

 private:
  Grid grid_;
  std::size_t spatial_modes_;
  std::vector<double> save_times_;
  double beta_;
  Eigen::MatrixXd sines_;           // N x K, orthonormal under the per-axis weight
  std::vector<Eigen::MatrixXd> temporal_;  // per (k, l): F x F, orthonormal under tau
  Eigen::VectorXd tau_;
  Eigen::VectorXd eigenvalues_;
  std::vector<ModeIndex> modes_;
};

}  // namespace pfode
