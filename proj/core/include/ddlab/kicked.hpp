#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ddlab/map_density.hpp"

namespace ddlab::kicked {

struct KickConfig {
  double gamma = 1.0;
  double tau = 0.1;
  std::optional<double> kappa;  // sqrt(tau) when empty
  map::MapSpec map = map::Hat{2.0};
  std::function<double(double)> h = [](double x) { return x - 0.5; };

  double kappa_value() const;
};

// Orbit xi_{j+1} = S(xi_j). For the full tent map the orbit is read off the
// binary expansion of theta = xi0 / 2 under angle doubling (xi_j is the tent
// of frac(2^j theta)), so no precision is lost with j. Bits beyond the 53
// carried by xi0 are filled from a SplitMix stream keyed by `extension_seed`.
// Other maps are iterated in floating point.
class ChaoticStream {
 public:
  ChaoticStream(const map::MapSpec& map, double xi0, std::uint64_t extension_seed = 0);
  double current() const noexcept { return current_; }
  double next();

 private:
  std::uint64_t window(std::size_t offset);

  map::MapSpec map_;
  bool exact_;
  double current_;
  std::size_t index_ = 0;
  std::vector<std::uint64_t> words_;
  std::uint64_t ext_state_;
};

// Sample j is the state just after kick j (sample 0 is the initial state).
struct KickedTrajectory {
  std::vector<double> x;
  std::vector<double> v;
  std::vector<double> v_pre;  // v just before kick j; v_pre[0] = v0
  std::vector<double> xi;     // chaotic state used for the next kick
};

KickedTrajectory evolve_kicked(const KickConfig& cfg, double x0, double v0, double xi0,
                               std::size_t n_kicks, std::uint64_t extension_seed = 0);

// ||P^t h||_1 for t = 0..n using the signed transfer operator.
std::vector<double> fp_decay_check(const map::MapSpec& map, const map::GridFunction& h, int n);
std::vector<double> fp_decay_check(const map::MapSpec& map, const std::function<double(double)>& h,
                                   int n, std::size_t cells = 4096);

struct OuSuiteOptions {
  double gamma = 1.0;
  std::vector<double> tau_list{0.2, 0.1, 0.05};
  double horizon = 200.0;   // time units per member
  double burn_in = 10.0;    // excluded from velocity statistics
  std::size_t members = 1000;
  unsigned threads = 1;
  map::MapSpec map = map::Hat{2.0};
  std::function<double(double)> h = [](double x) { return x - 0.5; };
};

struct OuRow {
  double tau;
  double var_v;           // time-averaged stationary velocity variance
  double normality_stat;  // KS distance of standardized post-kick v to N(0, 1)
  double msd_slope;
  double msd_r2;
};

struct OuSuiteReport {
  std::vector<OuRow> rows;
  double max_relative_step = 0.0;  // max |var_k - var_{k-1}| / var_{k-1}
  bool variance_cauchy = false;    // max_relative_step < 0.1
  bool normality_improves = false; // non-increasing up to 0.01
};

// Member i starts at x = v = 0 with xi0 = frac(0.5 + (i + 1) * golden ratio conjugate).
OuSuiteReport ou_limit_suite(const OuSuiteOptions& opt);

// Header `tau,var_v,normality_stat,msd_slope,msd_r2`.
void write_csv(std::ostream& out, const OuSuiteReport& report);

}  // namespace ddlab::kicked
