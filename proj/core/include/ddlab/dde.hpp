#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace ddlab::dde {

// Scalar systems use component 0; the Brownian system stores (x, v).
using State = std::array<double, 2>;

struct NoNoise {};
// Right-continuous path, constant on [k * interval, (k + 1) * interval),
// each level drawn uniformly on [lo, hi] from the trajectory's own stream.
struct PiecewiseConstantUniform {
  double lo;
  double hi;
  double resample_interval;
};
using NoiseProcess = std::variant<NoNoise, PiecewiseConstantUniform>;

// x' = -alpha x + hat_a(x(t - tau))
struct HatDde {
  double alpha;
  double a;
};
// x' = -alpha x + gain * [(a x(t - tau) + b + xi(t)) mod 1]
// gain = 1 is the equation as printed; gain = alpha is the singular-perturbation
// form eps x' = -x + S(x(t - tau)), whose state can reach the wrap point.
struct KeenerDde {
  double alpha;
  double a;
  double b;
  NoiseProcess noise = NoNoise{};
  double gain = 1.0;
};
// x' = v,  v' = -gamma v + forcing * sin(2 pi beta v(t - tau))
struct BrownianDde {
  double gamma;
  double beta;
  double forcing = 1.0;  // 0 switches the delayed drive off
};
// x' = a x + b x(t - tau)
struct LinearDde {
  double a;
  double b;
};
using DdeField = std::variant<HatDde, KeenerDde, BrownianDde, LinearDde>;

int state_dim(const DdeField& field);

State eval_field(const DdeField& field, const State& x, const State& x_delayed, double t,
                 double noise_value = 0.0);

// Sampled initial function on [t_now - tau, t_now] at spacing tau / m.
// samples[m] is the left limit at t_now; the state at t_now may differ
// (a jump), which is how the fundamental-solution datum is represented.
class History {
 public:
  History(double tau, int m, int dim, std::vector<State> samples, double t_now = 0.0);

  static History constant(double tau, int m, State value, int dim = 1);
  static History from_function(double tau, int m, int dim,
                               const std::function<State(double)>& phi);
  static History from_values(double tau, int m, std::span<const double> values,
                             int dim = 1, int component = 0);
  // X(t) datum: zero on [-tau, 0) and x(0) = 1.
  static History fundamental(double tau, int m);

  double tau() const noexcept { return tau_; }
  int m() const noexcept { return m_; }
  int dim() const noexcept { return dim_; }
  double step() const noexcept { return tau_ / m_; }
  double t_now() const noexcept { return t_now_; }
  std::span<const State> samples() const noexcept { return samples_; }
  const State& current() const noexcept { return current_; }
  void set_current(const State& s) noexcept { current_ = s; }

 private:
  double tau_;
  int m_;
  int dim_;
  std::vector<State> samples_;
  State current_;
  double t_now_;
};

struct Trajectory {
  double t0 = 0.0;
  double step = 0.0;  // spacing of the stored states
  int dim = 1;
  std::vector<State> states;

  std::size_t size() const noexcept { return states.size(); }
  double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * step; }
};

// Header `t,x` (or `t,x,v`), 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);

// Realized noise levels for one trajectory. Level k is a pure function of
// (seed, k), so paths can be read in any order.
class NoisePath {
 public:
  NoisePath(const PiecewiseConstantUniform& spec, std::uint64_t seed);
  double segment(std::size_t k) const;
  double value_at(double t) const;  // t measured from the start of the path

 private:
  PiecewiseConstantUniform spec_;
  std::uint64_t seed_;
};

struct IntegrateOptions {
  std::size_t output_stride = 1;  // keep every k-th step
};

// Method of steps with classical RK4. Step = tau / m; delayed values at
// stage midpoints come from 4-point Lagrange interpolation on stored nodes,
// with stencils kept inside one delay interval so the derivative jumps at
// t = k tau never enter a stencil. Throws DivergenceError on a non-finite
// state. Bitwise reproducible for fixed (field, initial, seed).
Trajectory integrate(const DdeField& field, const History& initial, double T,
                     std::uint64_t seed = 0, const IntegrateOptions& opt = {});

// Steps a single trajectory and reports states at requested step indices.
// Used by the ensemble driver to avoid storing full trajectories.
struct ObservedValues {
  std::vector<State> now;      // x(t_k)
  std::vector<State> delayed;  // x(t_k - tau)
};
ObservedValues integrate_observe(const DdeField& field, const History& initial,
                                 std::span<const std::size_t> step_indices,
                                 std::uint64_t seed = 0);

struct ConvergenceReport {
  double order = 0.0;
  std::array<double, 3> values{};  // x(T) at steps h, h/2, h/4
};

// Richardson estimate from three nested step sizes tau/m, tau/2m, tau/4m.
ConvergenceReport convergence_order(const DdeField& field,
                                    const std::function<State(double)>& phi, double tau,
                                    int m, double T, int component = 0);

// Converts t to a step index and verifies it is on the grid.
std::size_t step_index(double t, double t0, double step);

}  // namespace ddlab::dde
