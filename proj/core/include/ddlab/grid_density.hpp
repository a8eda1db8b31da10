#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace ddlab::map {

// Piecewise-constant function on a uniform partition of [lo, hi]; values are
// cell averages. Signed values are allowed: the transfer operators act on all
// of L1, not only on densities.
class GridFunction {
 public:
  GridFunction(double lo, double hi, std::vector<double> values);

  // Cell averages of f by 3-point Simpson per cell (exact for quadratics).
  static GridFunction tabulate(double lo, double hi, std::size_t cells,
                               const std::function<double(double)>& f);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return values_.size(); }
  double cell_width() const noexcept { return (hi_ - lo_) / static_cast<double>(values_.size()); }
  double left_edge(std::size_t i) const noexcept;
  double right_edge(std::size_t i) const noexcept { return left_edge(i + 1); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double integral() const;
  double l1_norm() const;
  bool same_grid(const GridFunction& other) const noexcept;

 private:
  double lo_;
  double hi_;
  std::vector<double> values_;
};

// Non-negative GridFunction. Construction does not renormalize; use
// normalized() or the factories, which return unit-mass densities.
class GridDensity {
 public:
  GridDensity(double lo, double hi, std::vector<double> values);
  explicit GridDensity(GridFunction f);

  static GridDensity uniform(double lo, double hi, std::size_t cells);
  // Normalized indicator of [a, b] with partial cells weighted by overlap.
  static GridDensity indicator(double lo, double hi, std::size_t cells, double a, double b);
  static GridDensity from_function(double lo, double hi, std::size_t cells,
                                   const std::function<double(double)>& f);

  const GridFunction& function() const noexcept { return f_; }
  double lo() const noexcept { return f_.lo(); }
  double hi() const noexcept { return f_.hi(); }
  std::size_t size() const noexcept { return f_.size(); }
  double cell_width() const noexcept { return f_.cell_width(); }
  std::span<const double> values() const noexcept { return f_.values(); }
  double operator[](std::size_t i) const { return f_[i]; }
  double mass() const { return f_.integral(); }
  GridDensity normalized() const;

 private:
  GridFunction f_;
};

double l1_distance(const GridFunction& f, const GridFunction& g);
double l1_distance(const GridDensity& f, const GridDensity& g);

// Header `x_left,x_right,density`, one row per cell, 17 significant digits.
void write_csv(std::ostream& out, const GridFunction& f);
GridFunction read_grid_csv(std::istream& in);

}  // namespace ddlab::map
