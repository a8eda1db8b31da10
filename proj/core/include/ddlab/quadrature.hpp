#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ddlab::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;  // sum of local Richardson error estimates
  std::size_t evaluations = 0;
  bool converged = true;
};

struct SimpsonOptions {
  double abs_tol = 1e-9;
  int max_depth = 40;
  int min_depth = 2;
  std::size_t max_evaluations = 4'000'000;
};

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth, int min_depth, Result& acc,
                    std::size_t max_evaluations) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  acc.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const bool resolved = std::abs(delta) <= 15.0 * tol && min_depth <= 0;
  if (resolved || depth <= 0 || acc.evaluations >= max_evaluations || !(m > a && b > m)) {
    if (!resolved) acc.converged = false;
    acc.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, min_depth - 1, acc,
                      max_evaluations) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, min_depth - 1, acc,
                      max_evaluations);
}

}  // namespace detail

// Adaptive Simpson with Richardson correction on [a, b].
template <class F>
Result simpson(const F& f, double a, double b, const SimpsonOptions& opt = {}) {
  Result acc;
  if (!(b > a)) return acc;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  acc.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  acc.value = detail::simpson_step(f, a, b, fa, fm, fb, whole, opt.abs_tol, opt.max_depth,
                                   opt.min_depth, acc, opt.max_evaluations);
  return acc;
}

// Splits [a, b] at the given interior breakpoints (kinks, jumps) and integrates
// each panel separately; the tolerance is shared in proportion to panel length.
template <class F>
Result simpson_piecewise(const F& f, double a, double b, std::span<const double> breaks,
                         const SimpsonOptions& opt = {}) {
  Result total;
  if (!(b > a)) return total;
  std::vector<double> nodes;
  nodes.reserve(breaks.size() + 2);
  nodes.push_back(a);
  for (double x : breaks)
    if (x > a && x < b) nodes.push_back(x);
  nodes.push_back(b);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double lo = nodes[i];
    const double hi = nodes[i + 1];
    if (!(hi > lo)) continue;
    SimpsonOptions local = opt;
    local.abs_tol = opt.abs_tol * (hi - lo) / (b - a);
    const Result r = simpson(f, lo, hi, local);
    total.value += r.value;
    total.error += r.error;
    total.evaluations += r.evaluations;
    total.converged = total.converged && r.converged;
  }
  return total;
}

}  // namespace ddlab::quad
