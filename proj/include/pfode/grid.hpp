#pragma once

#include <array>
#include <cstddef>

namespace pfode {

struct Interval {
  double lower;
  double upper;
  double length() const { return upper - lower; }
  bool operator==(const Interval&) const = default;
};

/// `closed` places nodes on both endpoints (np.linspace); `periodic` omits
/// the upper endpoint so the grid tiles the torus.
enum class GridLayout { closed, periodic };

/// Uniform tensor grid in one or two dimensions. Point index in 2D is
/// row-major: idx = i * N + j with i along axis 0.
class Grid {
 public:
  static Grid line(std::size_t points, Interval bounds,
                   GridLayout layout = GridLayout::closed);
  static Grid square(std::size_t points_per_axis, Interval x, Interval y,
                     GridLayout layout = GridLayout::closed);

  int dim() const { return dim_; }
  std::size_t points_per_axis() const { return n_; }
  std::size_t total_points() const { return dim_ == 1 ? n_ : n_ * n_; }
  GridLayout layout() const { return layout_; }
  const Interval& bounds(int axis) const { return bounds_[axis]; }

  double volume() const;
  /// Uniform quadrature weight: domain volume / total points.
  double quadrature_weight() const;
  double spacing(int axis) const;
  double coordinate(int axis, std::size_t i) const;

  bool operator==(const Grid&) const = default;

 private:
  Grid(int dim, std::size_t n, std::array<Interval, 2> bounds, GridLayout layout);

  int dim_;
  std::size_t n_;
  std::array<Interval, 2> bounds_;
  GridLayout layout_;
};

}  // namespace pfode
