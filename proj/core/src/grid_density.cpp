#include "ddlab/grid_density.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "ddlab/csv.hpp"
#include "ddlab/error.hpp"

namespace ddlab::map {

GridFunction::GridFunction(double lo, double hi, std::vector<double> values)
    : lo_(lo), hi_(hi), values_(std::move(values)) {
  if (!(hi_ > lo_) || !std::isfinite(lo_) || !std::isfinite(hi_))
    throw DomainError("grid needs finite lo < hi");
  if (values_.size() < 2) throw DomainError("grid needs at least 2 cells");
}

GridFunction GridFunction::tabulate(double lo, double hi, std::size_t cells,
                                    const std::function<double(double)>& f) {
  if (cells < 2) throw DomainError("grid needs at least 2 cells");
  std::vector<double> v(cells);
  const double h = (hi - lo) / static_cast<double>(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = lo + h * static_cast<double>(i);
    const double b = lo + h * static_cast<double>(i + 1);
    v[i] = (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) / 6.0;
  }
  return GridFunction(lo, hi, std::move(v));
}

double GridFunction::left_edge(std::size_t i) const noexcept {
  return lo_ + (hi_ - lo_) * static_cast<double>(i) / static_cast<double>(values_.size());
}

double GridFunction::integral() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * cell_width();
}

double GridFunction::l1_norm() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s * cell_width();
}

bool GridFunction::same_grid(const GridFunction& other) const noexcept {
  return lo_ == other.lo_ && hi_ == other.hi_ && values_.size() == other.values_.size();
}

GridDensity::GridDensity(double lo, double hi, std::vector<double> values)
    : GridDensity(GridFunction(lo, hi, std::move(values))) {}

GridDensity::GridDensity(GridFunction f) : f_(std::move(f)) {
  for (double v : f_.values())
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("density values must be finite and >= 0");
}

GridDensity GridDensity::uniform(double lo, double hi, std::size_t cells) {
  return GridDensity(lo, hi, std::vector<double>(cells, 1.0 / (hi - lo)));
}

GridDensity GridDensity::indicator(double lo, double hi, std::size_t cells, double a, double b) {
  if (!(b > a) || a < lo || b > hi) throw DomainError("indicator interval must lie inside the grid");
  std::vector<double> v(cells, 0.0);
  const double h = (hi - lo) / static_cast<double>(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double l = lo + h * static_cast<double>(i);
    const double r = lo + h * static_cast<double>(i + 1);
    const double overlap = std::max(0.0, std::min(r, b) - std::max(l, a));
    v[i] = overlap / h / (b - a);
  }
  return GridDensity(lo, hi, std::move(v));
}

GridDensity GridDensity::from_function(double lo, double hi, std::size_t cells,
                                       const std::function<double(double)>& f) {
  auto g = GridFunction::tabulate(lo, hi, cells, f);
  for (auto& v : g.values()) v = std::max(v, 0.0);
  return GridDensity(std::move(g)).normalized();
}

GridDensity GridDensity::normalized() const {
  const double m = mass();
  if (!(m > 0.0)) throw DomainError("cannot normalize a density with zero mass");
  std::vector<double> v(f_.values().begin(), f_.values().end());
  for (auto& x : v) x /= m;
  return GridDensity(lo(), hi(), std::move(v));
}

double l1_distance(const GridFunction& f, const GridFunction& g) {
  if (!f.same_grid(g)) throw DomainError("l1_distance needs identical grids");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i] - g[i]);
  return s * f.cell_width();
}

double l1_distance(const GridDensity& f, const GridDensity& g) {
  return l1_distance(f.function(), g.function());
}

void write_csv(std::ostream& out, const GridFunction& f) {
  csv::Writer w(out, {"x_left", "x_right", "density"});
  for (std::size_t i = 0; i < f.size(); ++i) w.row({f.left_edge(i), f.right_edge(i), f[i]});
}

GridFunction read_grid_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto xl = t.column("x_left");
  const auto xr = t.column("x_right");
  const auto d = t.column("density");
  if (t.rows.size() < 2) throw IoError("grid csv needs at least 2 rows");
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (const auto& r : t.rows) v.push_back(r[d]);
  GridFunction f(t.rows.front()[xl], t.rows.back()[xr], std::move(v));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double tol = 1e-9 * f.cell_width();
    if (std::abs(t.rows[i][xl] - f.left_edge(i)) > tol || std::abs(t.rows[i][xr] - f.right_edge(i)) > tol)
      throw IoError("grid csv cells are not uniform");
  }
  return f;
}

}  // namespace ddlab::map
