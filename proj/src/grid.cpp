#include "pfode/grid.hpp"

#include <string>

#include "pfode/errors.hpp"

namespace pfode {

Grid::Grid(int dim, std::size_t n, std::array<Interval, 2> bounds, GridLayout layout)
    : dim_(dim), n_(n), bounds_(bounds), layout_(layout) {
  if (n_ < 2) throw InvalidGrid("grid needs at least 2 points per axis, got " + std::to_string(n_));
  for (int a = 0; a < dim_; ++a) {
    if (!(bounds_[a].lower < bounds_[a].upper)) {
      throw InvalidGrid("grid bounds must satisfy lower < upper on axis " + std::to_string(a));
    }
  }
}

Grid Grid::line(std::size_t points, Interval bounds, GridLayout layout) {
  return Grid(1, points, {bounds, Interval{0.0, 1.0}}, layout);
}

Grid Grid::square(std::size_t points_per_axis, Interval x, Interval y, GridLayout layout) {
  return Grid(2, points_per_axis, {x, y}, layout);
}

double Grid::volume() const {
  double v = bounds_[0].length();
  if (dim_ == 2) v *= bounds_[1].length();
  return v;
}

double Grid::quadrature_weight() const {
  return volume() / static_cast<double>(total_points());
}

double Grid::spacing(int axis) const {
  const double len = bounds_[axis].length();
  return layout_ == GridLayout::closed ? len / static_cast<double>(n_ - 1)
                                       : len / static_cast<double>(n_);
}

double Grid::coordinate(int axis, std::size_t i) const {
  return bounds_[axis].lower + spacing(axis) * static_cast<double>(i);
}

}  // namespace pfode
