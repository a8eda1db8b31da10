#include "ddlab/map_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ddlab/error.hpp"

namespace ddlab::map {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_unit_interval(const GridFunction& f, const char* who) {
  if (f.lo() != 0.0 || f.hi() != 1.0)
    throw DomainError(std::string(who) + ": density must live on [0, 1]");
}

void check_hat(double a) {
  if (!(a > 0.0 && a <= 2.0)) throw DomainError("hat map needs 0 < a <= 2");
}

void check_keener(double a, double b) {
  if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0))
    throw DomainError("Keener map needs 0 < a < 1 and 0 < b < 1");
}

void check_noise(const GridDensity& noise) {
  if (noise.lo() != 0.0 || !(noise.hi() <= 1.0))
    throw DomainError("noise density must be supported on [0, w] with w <= 1");
  if (std::abs(noise.mass() - 1.0) > 1e-9) throw DomainError("noise density is not normalized");
}

void check_window(double A, double delta) {
  if (!(A >= 0.0 && delta >= 0.0 && A + delta <= 1.0 + 1e-15))
    throw DomainError("density-dependent hat needs 0 <= A and A + delta <= 1");
}
// Integral over (-inf, s] of the tent max(0, h - |u|).
// Integral over [0, s] of the tent max(0, h - |u|) shifted to start at -h.
double tent_cdf(double s, double h) {
  if (s <= -h) return 0.0;
  if (s < 0.0) return 0.5 * (s + h) * (s + h);
  if (s < h) return h * h - 0.5 * (h - s) * (h - s);
  return h * h;
}

GridDensity as_density(GridFunction f) {
  // Exact overlap weights are non-negative; rounding can leave -0.0 at worst.
  for (auto& v : f.values()) v = std::max(v, 0.0);
  return GridDensity(std::move(f));
}

GridDensity hat_step_unchecked(const GridDensity& f, double a) {
  TransferOperator op(0.0, 1.0, f.size(), hat_branches(a));
  return as_density(op.apply(f.function()));
}

}  // namespace

void validate(const MapSpec& spec) {
  std::visit(overloaded{
                 [](const Hat& m) { check_hat(m.a); },
                 [](const Keener& m) { check_keener(m.a, m.b); },
                 [](const NoisyKeener& m) {
                   check_keener(m.a, m.b);
                   check_noise(m.noise);
                 },
                 [](const DensityDependentHat& m) { check_window(m.A, m.delta); },
             },
             spec);
}

double apply_point(const MapSpec& spec, double x) {
  return std::visit(overloaded{
                        [x](const Hat& m) { return x < 0.5 ? m.a * x : m.a * (1.0 - x); },
                        [x](const Keener& m) {
                          const double y = m.a * x + m.b;
                          return y >= 1.0 ? y - 1.0 : y;
                        },
                        [](const NoisyKeener&) -> double {
                          throw DomainError("the noisy Keener map has no point form");
                        },
                        [](const DensityDependentHat&) -> double {
                          throw DomainError("the density-dependent hat has no point form");
                        },
                    },
                    spec);
}

std::vector<Branch> hat_branches(double a) {
  check_hat(a);
  return {{0.0, 0.5, a, 0.0}, {0.5, 1.0, -a, a}};
}

std::vector<Branch> keener_branches(double a, double b) {
  check_keener(a, b);
  const double c = (1.0 - b) / a;
  if (c >= 1.0) return {{0.0, 1.0, a, b}};
  return {{0.0, c, a, b}, {c, 1.0, a, b - 1.0}};
}

TransferOperator::TransferOperator(double lo, double hi, std::size_t cells,
                                   const std::vector<Branch>& branches)
    : lo_(lo), hi_(hi), cells_(cells) {
  if (!(hi > lo) || cells < 2) throw DomainError("transfer operator needs lo < hi and >= 2 cells");
  const double h = (hi - lo) / static_cast<double>(cells);
  const auto edge = [&](std::size_t i) { return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells); };
  const auto cell_of = [&](double x) {
    const double k = std::floor((x - lo) / h);
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(cells - 1)));
  };
  for (const auto& br : branches) {
    if (br.slope == 0.0) throw DomainError("transfer operator needs non-constant branches");
    const double inv = 1.0 / (std::abs(br.slope) * h);
    const std::size_t j0 = cell_of(br.lo);
    const std::size_t j1 = cell_of(std::nextafter(br.hi, br.lo));
    for (std::size_t j = j0; j <= j1; ++j) {
      const double p = std::max(edge(j), br.lo);
      const double q = std::min(edge(j + 1), br.hi);
      if (!(q > p)) continue;
      double y0 = br.slope * p + br.offset;
      double y1 = br.slope * q + br.offset;
      if (y0 > y1) std::swap(y0, y1);
      y0 = std::clamp(y0, lo, hi);
      y1 = std::clamp(y1, lo, hi);
      if (!(y1 > y0)) continue;
      const std::size_t i0 = cell_of(y0);
      const std::size_t i1 = cell_of(std::nextafter(y1, y0));
      for (std::size_t i = i0; i <= i1; ++i) {
        const double overlap = std::min(edge(i + 1), y1) - std::max(edge(i), y0);
        if (overlap > 0.0)
          entries_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), overlap * inv});
      }
    }
  }
}

void TransferOperator::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != cells_ || out.size() != cells_) throw DomainError("transfer operator size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& e : entries_) out[e.target] += e.weight * in[e.source];
}

GridFunction TransferOperator::apply(const GridFunction& f) const {
  if (f.lo() != lo_ || f.hi() != hi_ || f.size() != cells_)
    throw DomainError("transfer operator applied on a different grid");
  std::vector<double> out(cells_);
  apply(f.values(), out);
  return GridFunction(lo_, hi_, std::move(out));
}

CircularConvolution::CircularConvolution(std::size_t cells, const GridDensity& noise) : cells_(cells) {
  check_noise(noise);
  const double h = 1.0 / static_cast<double>(cells);
  const double hg = noise.cell_width();
  std::vector<double> c(cells, 0.0);
  for (std::size_t k = 0; k < noise.size(); ++k) {
    const double gk = noise[k];
    if (gk == 0.0) continue;
    const double xk = noise.function().left_edge(k);
    for (std::size_t d = 0; d < cells; ++d) {
      double s = 0.0;
      for (int m = -1; m <= 1; ++m) {
        const double D = static_cast<double>(d) * h + m;
        s += tent_cdf(xk + hg - D, h) - tent_cdf(xk - D, h);
      }
      c[d] += gk * s / h;
    }
  }
  for (std::size_t d = 0; d < cells; ++d)
    if (c[d] > 0.0) kernel_.emplace_back(d, c[d]);
}

void CircularConvolution::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != cells_ || out.size() != cells_) throw DomainError("convolution size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& [d, w] : kernel_) {
    for (std::size_t i = 0; i < d; ++i) out[i] += w * in[i + cells_ - d];
    for (std::size_t i = d; i < cells_; ++i) out[i] += w * in[i - d];
  }
}

GridFunction CircularConvolution::apply(const GridFunction& f) const {
  require_unit_interval(f, "circular convolution");
  std::vector<double> out(cells_);
  apply(f.values(), out);
  return GridFunction(0.0, 1.0, std::move(out));
}

FpStepper::FpStepper(const MapSpec& spec, std::size_t cells) : spec_(spec), cells_(cells) {
  validate(spec_);
  std::visit(overloaded{
                 [&](const Hat& m) { transfer_.emplace(0.0, 1.0, cells, hat_branches(m.a)); },
                 [&](const Keener& m) { transfer_.emplace(0.0, 1.0, cells, keener_branches(m.a, m.b)); },
                 [&](const NoisyKeener& m) {
                   transfer_.emplace(0.0, 1.0, cells, keener_branches(m.a, m.b));
                   conv_.emplace(cells, m.noise);
                 },
                 [&](const DensityDependentHat&) {},
             },
             spec_);
}

void FpStepper::apply(std::span<const double> in, std::span<double> out) const {
  if (!transfer_) throw DomainError("the density-dependent hat operator is not linear");
  if (conv_) {
    std::vector<double> scratch(cells_);
    transfer_->apply(in, scratch);
    conv_->apply(scratch, out);
  } else {
    transfer_->apply(in, out);
  }
}

GridDensity FpStepper::operator()(const GridDensity& f) const {
  require_unit_interval(f.function(), "FpStepper");
  if (f.size() != cells_) throw DomainError("FpStepper applied on a different grid");
  if (const auto* m = std::get_if<DensityDependentHat>(&spec_)) return pseudo_fp_hat(f, m->A, m->delta);
  std::vector<double> out(cells_);
  apply(f.values(), out);
  return as_density(GridFunction(0.0, 1.0, std::move(out)));
}

GridDensity fp_hat(const GridDensity& f, double a) {
  require_unit_interval(f.function(), "fp_hat");
  if (!(a > 1.0 && a <= 2.0)) throw DomainError("fp_hat needs 1 < a <= 2");
  return hat_step_unchecked(f, a);
}

GridDensity fp_keener(const GridDensity& f, double a, double b, const std::optional<GridDensity>& noise) {
  require_unit_interval(f.function(), "fp_keener");
  check_keener(a, b);
  TransferOperator op(0.0, 1.0, f.size(), keener_branches(a, b));
  auto g = op.apply(f.function());
  if (noise) g = CircularConvolution(f.size(), *noise).apply(g);
  return as_density(std::move(g));
}

double a_functional(const GridDensity& f, double A, double delta) {
  require_unit_interval(f.function(), "a_functional");
  check_window(A, delta);
  const double B = std::min(A + delta, 1.0);
  double s = 0.0;
  if (delta > 0.0) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double l = f.function().left_edge(i);
      const double r = f.function().right_edge(i);
      const double overlap = std::min(r, B) - std::max(l, A);
      if (overlap > 0.0) s += f[i] * overlap;
    }
  }
  return std::clamp(1.0 + s, 1.0, 2.0);
}

GridDensity pseudo_fp_hat(const GridDensity& f, double A, double delta) {
  return hat_step_unchecked(f, a_functional(f, A, delta));
}

GridDensity apply_fp(const MapSpec& spec, const GridDensity& f) {
  return std::visit(overloaded{
                        [&](const Hat& m) {
                          require_unit_interval(f.function(), "apply_fp");
                          check_hat(m.a);
                          return hat_step_unchecked(f, m.a);
                        },
                        [&](const Keener& m) { return fp_keener(f, m.a, m.b); },
                        [&](const NoisyKeener& m) { return fp_keener(f, m.a, m.b, m.noise); },
                        [&](const DensityDependentHat& m) { return pseudo_fp_hat(f, m.A, m.delta); },
                    },
                    spec);
}

GridFunction apply_fp_signed(const MapSpec& spec, const GridFunction& f) {
  require_unit_interval(f, "apply_fp_signed");
  FpStepper step(spec, f.size());
  std::vector<double> out(f.size());
  step.apply(f.values(), out);
  return GridFunction(0.0, 1.0, std::move(out));
}

PeriodReport detect_asymptotic_period(const MapSpec& spec, const GridDensity& f0, const PeriodOptions& opt) {
  require_unit_interval(f0.function(), "detect_asymptotic_period");
  validate(spec);
  if (opt.max_period < 1 || !(opt.tol > 0.0) || opt.burn_in < 0)
    throw DomainError("period detection needs max_period >= 1, tol > 0, burn_in >= 0");

  const FpStepper step(spec, f0.size());
  GridDensity cur = f0;
  for (int i = 0; i < opt.burn_in; ++i) cur = step(cur);

  std::vector<GridDensity> iterates{cur};
  PeriodReport report;
  report.burn_in = opt.burn_in;
  report.cycle_distance = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= opt.max_period; ++r) {
    while (iterates.size() < static_cast<std::size_t>(3 * r)) iterates.push_back(step(iterates.back()));
    double worst = 0.0;
    for (int k = 0; k < 2 * r && worst <= opt.tol; ++k)
      worst = std::max(worst, l1_distance(iterates[k + r], iterates[k]));
    if (worst <= opt.tol) {
      report.period = r;
      report.cycle_distance = worst;
      report.basis_snapshots.assign(iterates.begin(), iterates.begin() + r);
      return report;
    }
    report.cycle_distance = std::min(report.cycle_distance, worst);
  }
  return report;
}

}  // namespace ddlab::map
