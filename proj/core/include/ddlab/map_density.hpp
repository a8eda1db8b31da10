#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "ddlab/grid_density.hpp"

namespace ddlab::map {

struct Hat {
  double a;
};
struct Keener {
  double a;
  double b;
};
struct NoisyKeener {
  double a;
  double b;
  GridDensity noise;  // supported on [0, w], w <= 1
};
struct DensityDependentHat {
  double A;
  double delta;
};
using MapSpec = std::variant<Hat, Keener, NoisyKeener, DensityDependentHat>;

void validate(const MapSpec& spec);
// Point map S(x). The density-dependent hat has no point form and throws.
double apply_point(const MapSpec& spec, double x);

// One affine piece y = slope * x + offset of a piecewise-monotone map on [lo, hi].
struct Branch {
  double lo;
  double hi;
  double slope;
  double offset;
};

std::vector<Branch> hat_branches(double a);
std::vector<Branch> keener_branches(double a, double b);

// Cell-averaged Frobenius-Perron operator of a piecewise-affine map on a
// uniform grid. Entry (target, source) carries the exact length of the
// preimage of the target cell inside the source cell, divided by the cell
// width, so mass and positivity are preserved without quadrature.
class TransferOperator {
 public:
  TransferOperator(double lo, double hi, std::size_t cells, const std::vector<Branch>& branches);

  std::size_t size() const noexcept { return cells_; }
  void apply(std::span<const double> in, std::span<double> out) const;
  GridFunction apply(const GridFunction& f) const;

 private:
  struct Entry {
    std::uint32_t target;
    std::uint32_t source;
    double weight;
  };
  double lo_;
  double hi_;
  std::size_t cells_;
  std::vector<Entry> entries_;
};

// Circular (mod 1) convolution with a noise density on [0, w], cell-averaged
// exactly: the sum of two independent uniform boxes has a piecewise-quadratic
// distribution function, integrated over each target cell.
class CircularConvolution {
 public:
  CircularConvolution(std::size_t cells, const GridDensity& noise);
  void apply(std::span<const double> in, std::span<double> out) const;
  GridFunction apply(const GridFunction& f) const;

 private:
  std::size_t cells_;
  std::vector<std::pair<std::size_t, double>> kernel_;  // (offset, weight)
};

// One application of the operator for `spec` on a fixed N-cell grid over
// [0, 1]. Built once, so repeated iteration does not rebuild the weights.
class FpStepper {
 public:
  FpStepper(const MapSpec& spec, std::size_t cells);
  GridDensity operator()(const GridDensity& f) const;
  // Linear maps only.
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  MapSpec spec_;
  std::size_t cells_;
  std::optional<TransferOperator> transfer_;
  std::optional<CircularConvolution> conv_;
};

GridDensity fp_hat(const GridDensity& f, double a);
GridDensity fp_keener(const GridDensity& f, double a, double b,
                      const std::optional<GridDensity>& noise = std::nullopt);
double a_functional(const GridDensity& f, double A, double delta);
GridDensity pseudo_fp_hat(const GridDensity& f, double A, double delta);

// Applies the operator belonging to `spec` (any variant) once.
GridDensity apply_fp(const MapSpec& spec, const GridDensity& f);
// Linear operators on signed functions; rejects the density-dependent map.
GridFunction apply_fp_signed(const MapSpec& spec, const GridFunction& f);

struct PeriodReport {
  std::optional<int> period;
  int burn_in = 0;
  double cycle_distance = 0.0;  // max L1(f_{k+r}, f_k) over the verification window
  std::vector<GridDensity> basis_snapshots;
};

struct PeriodOptions {
  int burn_in = 200;
  int max_period = 64;
  double tol = 1e-4;
};

PeriodReport detect_asymptotic_period(const MapSpec& spec, const GridDensity& f0,
                                      const PeriodOptions& opt = {});

}  // namespace ddlab::map
