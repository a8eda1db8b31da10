#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "ddlab/dde.hpp"
#include "ddlab/gaussian.hpp"

namespace ddlab::ensemble {

// Each node of the history is an independent uniform draw on [lo, hi].
struct IidUniformPath {
  double lo;
  double hi;
};
struct ConstantPath {
  double value;
};
struct GaussianHistory {
  gaussian::CovKernel kernel;
};
using LeafSpec = std::variant<IidUniformPath, ConstantPath, GaussianHistory>;
// Members are laid out block by block in the listed order.
struct Mixture {
  std::vector<std::pair<LeafSpec, std::size_t>> components;
};
using InitialEnsembleSpec = std::variant<IidUniformPath, ConstantPath, GaussianHistory, Mixture>;

// Produces history i on demand so large ensembles are never materialized.
using HistorySource = std::function<dde::History(std::size_t)>;

struct SourceOptions {
  int dim = 1;
  int component = 0;  // which state component the spec fills; others are zero
};

// `n` is needed to validate mixture counts; member i draws from
// derive_seed(seed, {i, 0}).
HistorySource make_source(const InitialEnsembleSpec& spec, std::size_t n, int m, double tau,
                          std::uint64_t seed, const SourceOptions& opt = {});
std::vector<dde::History> sample_initial(const InitialEnsembleSpec& spec, std::size_t n, int m,
                                         double tau, std::uint64_t seed,
                                         const SourceOptions& opt = {});

class Histogram {
 public:
  Histogram(double lo, double hi, std::size_t bins);
  Histogram(double lo, double hi, std::vector<std::uint64_t> counts);

  // Samples outside [lo, hi] land in the nearest edge bin.
  void add(double x);
  std::size_t bin_of(double x) const;
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t bins() const noexcept { return counts_.size(); }
  double bin_width() const noexcept { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
  double bin_left(std::size_t i) const noexcept;
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  std::uint64_t total() const noexcept { return total_; }
  double density(std::size_t i) const;
  std::vector<double> densities() const;

 private:
  double lo_;
  double hi_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// L1 distance between the two piecewise-constant densities (same bins).
double l1_distance(const Histogram& f, const Histogram& g);

class Histogram2D {
 public:
  Histogram2D(double lo, double hi, std::size_t bins);  // same bins on both axes

  void add(double x, double y);
  std::size_t bins() const noexcept { return bins_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double bin_width() const noexcept { return (hi_ - lo_) / static_cast<double>(bins_); }
  std::uint64_t count(std::size_t ix, std::size_t iy) const { return counts_[ix * bins_ + iy]; }
  std::uint64_t total() const noexcept { return total_; }
  double density(std::size_t ix, std::size_t iy) const;
  Histogram x_marginal() const;

 private:
  double lo_;
  double hi_;
  std::size_t bins_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct DensitySnapshot {
  double t;
  Histogram marginal;
  std::optional<Histogram2D> joint;  // over (x(t), x(t - tau))
  std::size_t n;
};

// Values of one state component across the ensemble, row-major [member][time].
struct SnapshotValues {
  std::vector<double> times;
  std::size_t members = 0;
  std::vector<double> now;
  std::vector<double> delayed;

  double value(std::size_t member, std::size_t k) const { return now[member * times.size() + k]; }
};

struct EvolveOptions {
  unsigned threads = 1;
  int component = 0;
  std::size_t bins = 100;
  bool joint = true;
  // Frozen histogram range; when empty, the min/max over every stored value.
  std::optional<std::pair<double, double>> range;
};

// Member i uses derive_seed(seed, {i, 1}) for its noise path. A diverging
// member is reported through DivergenceError with its index.
SnapshotValues collect_snapshot_values(const HistorySource& source, std::size_t n,
                                       const dde::DdeField& field,
                                       std::span<const double> times, std::uint64_t seed,
                                       unsigned threads = 1, int component = 0);
std::vector<DensitySnapshot> build_snapshots(const SnapshotValues& values,
                                             const EvolveOptions& opt = {});
std::vector<DensitySnapshot> evolve_ensemble(const HistorySource& source, std::size_t n,
                                             const dde::DdeField& field,
                                             std::span<const double> times, std::uint64_t seed,
                                             const EvolveOptions& opt = {});

std::vector<dde::Trajectory> run_trajectories(const HistorySource& source, std::size_t n,
                                              const dde::DdeField& field, double T,
                                              std::uint64_t seed, unsigned threads = 1,
                                              std::size_t output_stride = 1);

struct DensityPeriod {
  std::optional<std::size_t> lag;  // in snapshot spacings
  std::optional<double> period;    // lag * dt
  std::vector<double> profile;     // profile[k] = mean L1(f_i, f_{i+k}), profile[0] = 0
};

// Smallest lag k >= 2 with profile[k] < tol and profile[k] < min_{1<=j<k}
// profile[j] / 2. A stationary sequence has no period.
DensityPeriod detect_density_period(std::span<const DensitySnapshot> snapshots, double dt,
                                    double tol = 0.1);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct MsdReport {
  std::vector<double> t;
  std::vector<double> msd;
  LinearFit tail;  // fit over [T/2, T]
};
// Requires >= 100 trajectories spanning >= 100 delays.
MsdReport msd_curve(std::span<const dde::Trajectory> trajectories, double tau, int component = 0);

struct VelocityStats {
  double mean = 0.0;
  double std = 0.0;
  double max_abs = 0.0;
  std::size_t samples = 0;
  double fit_C = 0.0;  // log density ~ c0 - C v^2
  double fit_r2 = 0.0;
};
VelocityStats velocity_stats(std::span<const dde::Trajectory> trajectories, double burn_in,
                             int component = 1, std::size_t min_samples = 1000000,
                             std::size_t bins = 100);

// Empirical laws for x' = v, v' = -gamma v + sin(2 pi beta v(t - 1)).
double brownian_bound(double beta, double gamma);
double brownian_sigma(double beta, double gamma);

}  // namespace ddlab::ensemble
