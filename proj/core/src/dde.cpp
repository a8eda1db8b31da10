#include "ddlab/dde.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "ddlab/csv.hpp"
#include "ddlab/error.hpp"
#include "ddlab/rng.hpp"

namespace ddlab::dde {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// 4-point Lagrange weights for the midpoint of nodes (p, p + 1) when the
// stencil starts at p, p - 1 or p - 2.
constexpr double kMidLeft[4] = {0.3125, 0.9375, -0.3125, 0.0625};
constexpr double kMidCentered[4] = {-0.0625, 0.5625, 0.5625, -0.0625};
constexpr double kMidRight[4] = {0.0625, -0.3125, 0.9375, 0.3125};

State axpy(const State& x, double h, const State& k) { return {x[0] + h * k[0], x[1] + h * k[1]}; }

bool finite(const State& s, int dim) {
  for (int i = 0; i < dim; ++i)
    if (!std::isfinite(s[i])) return false;
  return true;
}

class Engine {
 public:
  Engine(const DdeField& field, const History& hist, std::uint64_t seed)
      : field_(field), hist_(hist), m_(hist.m()), h_(hist.step()), dim_(hist.dim()) {
    if (state_dim(field) != dim_) throw DomainError("history dimension does not match the field");
    if (m_ < 3) throw DomainError("integration needs at least 3 steps per delay");
    const auto size = std::bit_ceil(static_cast<std::size_t>(m_) + 4);
    ring_.resize(size);
    mask_ = size - 1;
    ring_[0] = hist.current();
    if (const auto* k = std::get_if<KeenerDde>(&field)) {
      if (const auto* pc = std::get_if<PiecewiseConstantUniform>(&k->noise)) {
        if (!(pc->resample_interval > 0.0) || !(pc->hi >= pc->lo))
          throw DomainError("noise needs lo <= hi and a positive resample interval");
        noise_.emplace(*pc, seed);
        const double r = pc->resample_interval / h_;
        const double rr = std::round(r);
        if (rr >= 1.0 && std::abs(r - rr) <= 1e-9 * r) steps_per_level_ = static_cast<std::size_t>(rr);
      }
    }
  }

  long index() const noexcept { return n_; }
  double time() const noexcept { return hist_.t_now() + static_cast<double>(n_) * h_; }
  const State& state() const noexcept { return ring_[static_cast<std::size_t>(n_) & mask_]; }

  // Stored value at node q (time t_now + q * step), q in [n - m - 2, n].
  // Node 0 is the state x(t_now); negative nodes come from the history.
  State node(long q) const {
    if (q < 0) return hist_.samples()[static_cast<std::size_t>(q + m_)];
    return ring_[static_cast<std::size_t>(q) & mask_];
  }

  void step() {
    const long q0 = n_ - m_;
    // Delay segment holding [q0, q0 + 1]; the history segment ends with the
    // left limit at t_now, later segments start at a multiple of m.
    const bool in_history = q0 < 0;
    const long base = in_history ? -m_ : (q0 / m_) * m_;
    const long p = q0 - base;
    const auto seg = [&](long i) -> State {
      const long q = base + i;
      if (in_history) return hist_.samples()[static_cast<std::size_t>(i)];
      return ring_[static_cast<std::size_t>(q) & mask_];
    };
    const State d0 = seg(p);
    const State d1 = seg(p + 1);
    const double* w;
    long s;
    if (p == 0) {
      w = kMidLeft;
      s = 0;
    } else if (p == m_ - 1) {
      w = kMidRight;
      s = p - 2;
    } else {
      w = kMidCentered;
      s = p - 1;
    }
    State dm{0.0, 0.0};
    for (int j = 0; j < 4; ++j) {
      const State v = seg(s + j);
      dm[0] += w[j] * v[0];
      dm[1] += w[j] * v[1];
    }

    const double t = time();
    const double xi = noise_value();
    const State x = state();
    const State k1 = eval_field(field_, x, d0, t, xi);
    const State k2 = eval_field(field_, axpy(x, 0.5 * h_, k1), dm, t + 0.5 * h_, xi);
    const State k3 = eval_field(field_, axpy(x, 0.5 * h_, k2), dm, t + 0.5 * h_, xi);
    const State k4 = eval_field(field_, axpy(x, h_, k3), d1, t + h_, xi);
    State next;
    for (int i = 0; i < 2; ++i) next[i] = x[i] + h_ / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (dim_ == 1) next[1] = 0.0;
    ++n_;
    if (!finite(next, dim_)) throw DivergenceError(time(), "non-finite state at t = " + csv::format(time()));
    ring_[static_cast<std::size_t>(n_) & mask_] = next;
  }

 private:
  double noise_value() const {
    if (!noise_) return 0.0;
    if (steps_per_level_ > 0) return noise_->segment(static_cast<std::size_t>(n_) / steps_per_level_);
    return noise_->value_at(static_cast<double>(n_) * h_);
  }

  const DdeField& field_;
  const History& hist_;
  long m_;
  double h_;
  int dim_;
  std::vector<State> ring_;
  std::size_t mask_ = 0;
  long n_ = 0;
  std::optional<NoisePath> noise_;
  std::size_t steps_per_level_ = 0;
};

double hat(double a, double y) { return y < 0.5 ? a * y : a * (1.0 - y); }

}  // namespace

int state_dim(const DdeField& field) { return std::holds_alternative<BrownianDde>(field) ? 2 : 1; }

State eval_field(const DdeField& field, const State& x, const State& xd, double /*t*/, double noise_value) {
  return std::visit(overloaded{
                        [&](const HatDde& f) -> State { return {-f.alpha * x[0] + hat(f.a, xd[0]), 0.0}; },
                        [&](const KeenerDde& f) -> State {
                          const double y = f.a * xd[0] + f.b + noise_value;
                          return {-f.alpha * x[0] + f.gain * (y - std::floor(y)), 0.0};
                        },
                        [&](const BrownianDde& f) -> State {
                          return {x[1], -f.gamma * x[1] +
                                            f.forcing * std::sin(2.0 * std::numbers::pi * f.beta * xd[1])};
                        },
                        [&](const LinearDde& f) -> State { return {f.a * x[0] + f.b * xd[0], 0.0}; },
                    },
                    field);
}

History::History(double tau, int m, int dim, std::vector<State> samples, double t_now)
    : tau_(tau), m_(m), dim_(dim), samples_(std::move(samples)), t_now_(t_now) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("history needs tau > 0");
  if (m < 2) throw DomainError("history needs m >= 2");
  if (dim != 1 && dim != 2) throw DomainError("history dimension must be 1 or 2");
  if (samples_.size() != static_cast<std::size_t>(m) + 1) throw DomainError("history needs m + 1 samples");
  current_ = samples_.back();
}

History History::constant(double tau, int m, State value, int dim) {
  if (m < 2) throw DomainError("history needs m >= 2");
  return History(tau, m, dim, std::vector<State>(static_cast<std::size_t>(m) + 1, value));
}

History History::from_function(double tau, int m, int dim, const std::function<State(double)>& phi) {
  if (m < 2) throw DomainError("history needs m >= 2");
  std::vector<State> s(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) s[static_cast<std::size_t>(k)] = phi(-tau + tau * k / m);
  s.back() = phi(0.0);
  return History(tau, m, dim, std::move(s));
}

History History::from_values(double tau, int m, std::span<const double> values, int dim, int component) {
  if (values.size() != static_cast<std::size_t>(m) + 1) throw DomainError("history needs m + 1 values");
  if (component < 0 || component >= dim) throw DomainError("history component out of range");
  std::vector<State> s(values.size(), State{0.0, 0.0});
  for (std::size_t k = 0; k < values.size(); ++k) s[k][static_cast<std::size_t>(component)] = values[k];
  return History(tau, m, dim, std::move(s));
}

History History::fundamental(double tau, int m) {
  auto h = constant(tau, m, {0.0, 0.0}, 1);
  h.set_current({1.0, 0.0});
  return h;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  std::vector<std::string> header{"t", "x"};
  if (traj.dim == 2) header.emplace_back("v");
  csv::Writer w(out, header);
  std::vector<double> row(header.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    row[0] = traj.time(i);
    row[1] = traj.states[i][0];
    if (traj.dim == 2) row[2] = traj.states[i][1];
    w.row(row);
  }
}

NoisePath::NoisePath(const PiecewiseConstantUniform& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {}

double NoisePath::segment(std::size_t k) const {
  const std::uint64_t bits = derive_seed(seed_, {k});
  return spec_.lo + (spec_.hi - spec_.lo) * (static_cast<double>(bits >> 11) * 0x1.0p-53);
}

double NoisePath::value_at(double t) const {
  const double k = std::floor(t / spec_.resample_interval);
  return segment(k <= 0.0 ? 0 : static_cast<std::size_t>(k));
}

std::size_t step_index(double t, double t0, double step) {
  const double r = (t - t0) / step;
  const double k = std::round(r);
  if (!(k >= 0.0) || std::abs(r - k) > 1e-9 * std::max(1.0, std::abs(r)))
    throw DomainError("time " + csv::format(t) + " is not on the integration grid");
  return static_cast<std::size_t>(k);
}

Trajectory integrate(const DdeField& field, const History& initial, double T, std::uint64_t seed,
                     const IntegrateOptions& opt) {
  if (opt.output_stride == 0) throw DomainError("output stride must be positive");
  const std::size_t steps = step_index(initial.t_now() + T, initial.t_now(), initial.step());
  Engine engine(field, initial, seed);
  Trajectory traj;
  traj.t0 = initial.t_now();
  traj.step = initial.step() * static_cast<double>(opt.output_stride);
  traj.dim = initial.dim();
  traj.states.reserve(steps / opt.output_stride + 1);
  traj.states.push_back(engine.state());
  for (std::size_t n = 1; n <= steps; ++n) {
    engine.step();
    if (n % opt.output_stride == 0) traj.states.push_back(engine.state());
  }
  return traj;
}

ObservedValues integrate_observe(const DdeField& field, const History& initial,
                                 std::span<const std::size_t> step_indices, std::uint64_t seed) {
  if (!std::is_sorted(step_indices.begin(), step_indices.end()))
    throw DomainError("observation steps must be sorted");
  Engine engine(field, initial, seed);
  ObservedValues out;
  out.now.reserve(step_indices.size());
  out.delayed.reserve(step_indices.size());
  const long m = initial.m();
  for (std::size_t k : step_indices) {
    while (static_cast<std::size_t>(engine.index()) < k) engine.step();
    out.now.push_back(engine.state());
    out.delayed.push_back(engine.node(static_cast<long>(k) - m));
  }
  return out;
}

ConvergenceReport convergence_order(const DdeField& field, const std::function<State(double)>& phi,
                                    double tau, int m, double T, int component) {
  ConvergenceReport rep;
  const int dim = state_dim(field);
  for (int i = 0; i < 3; ++i) {
    const auto hist = History::from_function(tau, m << i, dim, phi);
    const auto traj = integrate(field, hist, T, 0, {});
    rep.values[static_cast<std::size_t>(i)] = traj.states.back()[static_cast<std::size_t>(component)];
  }
  const double e1 = std::abs(rep.values[0] - rep.values[1]);
  const double e2 = std::abs(rep.values[1] - rep.values[2]);
  rep.order = std::log2(e1 / e2);
  return rep;
}

}  // namespace ddlab::dde
