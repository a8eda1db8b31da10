#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ddlab/grid_density.hpp"

namespace ddlab::oracle {

// Histogram of samples on an N-cell grid over [0, 1], as a density.
inline map::GridDensity sample_histogram(const std::vector<double>& xs, std::size_t cells) {
  std::vector<double> v(cells, 0.0);
  for (double x : xs) {
    auto i = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * static_cast<double>(cells));
    v[std::min(i, cells - 1)] += 1.0;
  }
  const double scale = static_cast<double>(cells) / static_cast<double>(xs.size());
  for (double& c : v) c *= scale;
  return map::GridDensity(0.0, 1.0, std::move(v));
}

// Expected L1 distance between a histogram of n samples and its mean, from the
// cell probabilities: sum_i E|p_hat_i - p_i| ~ sum_i sqrt(2 p_i (1 - p_i) / (pi n)).
inline double mc_l1_scale(const map::GridDensity& f, std::size_t n) {
  double s = 0.0;
  const double h = f.cell_width();
  for (double v : f.values()) {
    const double p = v * h;
    s += std::sqrt(2.0 * p * (1.0 - p) / (M_PI * static_cast<double>(n)));
  }
  return s;
}

// Two-sided KS distance of a sample against the uniform law on [0, 1].
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - xs[i]));
    d = std::max(d, std::abs(xs[i] - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace ddlab::oracle
