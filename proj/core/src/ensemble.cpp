#include "ddlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "ddlab/error.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/rng.hpp"

namespace ddlab::ensemble {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// History i drawn from one leaf, with member-specific seed.
HistorySource leaf_source(const LeafSpec& spec, int m, double tau, std::uint64_t seed, const SourceOptions& opt) {
  if (opt.component < 0 || opt.component >= opt.dim) throw DomainError("history component out of range");
  return std::visit(
      overloaded{
          [&](const IidUniformPath& u) -> HistorySource {
            if (!(u.lo < u.hi)) throw DomainError("uniform path needs lo < hi");
            return [u, m, tau, seed, opt](std::size_t i) {
              Rng rng(derive_seed(seed, {i, 0}));
              std::vector<double> v(static_cast<std::size_t>(m) + 1);
              for (auto& x : v) x = rng.uniform(u.lo, u.hi);
              return dde::History::from_values(tau, m, v, opt.dim, opt.component);
            };
          },
          [&](const ConstantPath& c) -> HistorySource {
            return [c, m, tau, opt](std::size_t) {
              std::vector<double> v(static_cast<std::size_t>(m) + 1, c.value);
              return dde::History::from_values(tau, m, v, opt.dim, opt.component);
            };
          },
          [&](const GaussianHistory& g) -> HistorySource {
            auto sampler = std::make_shared<const gaussian::HistorySampler>(g.kernel, m, tau);
            return [sampler, m, tau, seed, opt](std::size_t i) {
              const auto h = (*sampler)(derive_seed(seed, {i, 0}));
              if (opt.dim == 1) return h;
              std::vector<double> v;
              for (const auto& s : h.samples()) v.push_back(s[0]);
              return dde::History::from_values(tau, m, v, opt.dim, opt.component);
            };
          },
      },
      spec);
}

double range_pad(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

DivergenceError tag(const DivergenceError& e, std::size_t i) {
  return DivergenceError(e.time(), "trajectory " + std::to_string(i) + ": " + e.what(),
                         static_cast<std::ptrdiff_t>(i));
}

}  // namespace

HistorySource make_source(const InitialEnsembleSpec& spec, std::size_t n, int m, double tau, std::uint64_t seed,
                          const SourceOptions& opt) {
  if (n == 0) throw DomainError("ensemble needs n >= 1");
  if (m < 2) throw DomainError("ensemble histories need m >= 2");
  if (const auto* mix = std::get_if<Mixture>(&spec)) {
    std::vector<HistorySource> parts;
    std::vector<std::size_t> ends;
    std::size_t total = 0;
    for (const auto& [leaf, count] : mix->components) {
      if (count == 0) throw DomainError("mixture counts must be positive");
      parts.push_back(leaf_source(leaf, m, tau, seed, opt));
      total += count;
      ends.push_back(total);
    }
    if (parts.empty()) throw DomainError("mixture needs at least one component");
    if (total != n) throw DomainError("mixture counts sum to " + std::to_string(total) + ", expected " + std::to_string(n));
    return [parts, ends](std::size_t i) {
      const auto it = std::upper_bound(ends.begin(), ends.end(), i);
      if (it == ends.end()) throw DomainError("ensemble member index out of range");
      return parts[static_cast<std::size_t>(it - ends.begin())](i);
    };
  }
  LeafSpec leaf = std::visit(overloaded{
                                 [](const Mixture&) -> LeafSpec { throw DomainError("unreachable"); },
                                 [](const auto& l) -> LeafSpec { return l; },
                             },
                             spec);
  return leaf_source(leaf, m, tau, seed, opt);
}

std::vector<dde::History> sample_initial(const InitialEnsembleSpec& spec, std::size_t n, int m, double tau,
                                         std::uint64_t seed, const SourceOptions& opt) {
  const auto source = make_source(spec, n, m, tau, seed, opt);
  std::vector<dde::History> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(source(i));
  return out;
}

Histogram::Histogram(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi), counts_(bins, 0) {
  if (!(hi > lo) || bins == 0) throw DomainError("histogram needs lo < hi and bins >= 1");
}

Histogram::Histogram(double lo, double hi, std::vector<std::uint64_t> counts)
    : lo_(lo), hi_(hi), counts_(std::move(counts)) {
  if (!(hi > lo) || counts_.empty()) throw DomainError("histogram needs lo < hi and bins >= 1");
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::size_t Histogram::bin_of(double x) const {
  const double k = std::floor((x - lo_) / bin_width());
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(counts_.size() - 1)));
}

void Histogram::add(double x) {
  ++counts_[bin_of(x)];
  ++total_;
}

double Histogram::bin_left(std::size_t i) const noexcept {
  return lo_ + (hi_ - lo_) * static_cast<double>(i) / static_cast<double>(counts_.size());
}

double Histogram::density(std::size_t i) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(counts_[i]) / (static_cast<double>(total_) * bin_width());
}

std::vector<double> Histogram::densities() const {
  std::vector<double> d(counts_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = density(i);
  return d;
}

double l1_distance(const Histogram& f, const Histogram& g) {
  if (f.lo() != g.lo() || f.hi() != g.hi() || f.bins() != g.bins())
    throw DomainError("histograms must share their bins");
  double s = 0.0;
  for (std::size_t i = 0; i < f.bins(); ++i) s += std::abs(f.density(i) - g.density(i));
  return s * f.bin_width();
}

Histogram2D::Histogram2D(double lo, double hi, std::size_t bins)
    : lo_(lo), hi_(hi), bins_(bins), counts_(bins * bins, 0) {
  if (!(hi > lo) || bins == 0) throw DomainError("histogram needs lo < hi and bins >= 1");
}

void Histogram2D::add(double x, double y) {
  const auto idx = [&](double v) {
    const double k = std::floor((v - lo_) / bin_width());
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(bins_ - 1)));
  };
  ++counts_[idx(x) * bins_ + idx(y)];
  ++total_;
}

double Histogram2D::density(std::size_t ix, std::size_t iy) const {
  if (total_ == 0) return 0.0;
  const double w = bin_width();
  return static_cast<double>(count(ix, iy)) / (static_cast<double>(total_) * w * w);
}

Histogram Histogram2D::x_marginal() const {
  std::vector<std::uint64_t> c(bins_, 0);
  for (std::size_t ix = 0; ix < bins_; ++ix)
    for (std::size_t iy = 0; iy < bins_; ++iy) c[ix] += count(ix, iy);
  return Histogram(lo_, hi_, std::move(c));
}

SnapshotValues collect_snapshot_values(const HistorySource& source, std::size_t n, const dde::DdeField& field,
                                       std::span<const double> times, std::uint64_t seed, unsigned threads,
                                       int component) {
  if (n == 0) throw DomainError("ensemble needs n >= 1");
  if (!std::is_sorted(times.begin(), times.end())) throw DomainError("snapshot times must be ascending");
  const auto probe = source(0);
  if (component < 0 || component >= probe.dim()) throw DomainError("snapshot component out of range");
  std::vector<std::size_t> idx;
  for (double t : times) idx.push_back(dde::step_index(t, probe.t_now(), probe.step()));

  SnapshotValues out;
  out.times.assign(times.begin(), times.end());
  out.members = n;
  const std::size_t S = times.size();
  out.now.resize(n * S);
  out.delayed.resize(n * S);
  const auto c = static_cast<std::size_t>(component);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      const auto obs = dde::integrate_observe(field, source(i), idx, derive_seed(seed, {i, 1}));
      for (std::size_t k = 0; k < S; ++k) {
        out.now[i * S + k] = obs.now[k][c];
        out.delayed[i * S + k] = obs.delayed[k][c];
      }
    } catch (const DivergenceError& e) {
      throw tag(e, i);
    }
  });
  return out;
}

std::vector<DensitySnapshot> build_snapshots(const SnapshotValues& values, const EvolveOptions& opt) {
  if (opt.bins == 0) throw DomainError("histograms need at least one bin");
  double lo, hi;
  if (opt.range) {
    std::tie(lo, hi) = *opt.range;
    if (!(hi > lo)) throw DomainError("histogram range needs lo < hi");
  } else {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (double v : values.now) lo = std::min(lo, v), hi = std::max(hi, v);
    if (opt.joint)
      for (double v : values.delayed) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!(hi - lo > range_pad(lo))) {
      const double mid = 0.5 * (lo + hi);
      lo = mid - range_pad(mid);
      hi = mid + range_pad(mid);
    }
  }
  const std::size_t S = values.times.size();
  std::vector<DensitySnapshot> out;
  out.reserve(S);
  for (std::size_t k = 0; k < S; ++k) {
    DensitySnapshot snap{values.times[k], Histogram(lo, hi, opt.bins), std::nullopt, values.members};
    if (opt.joint) snap.joint.emplace(lo, hi, opt.bins);
    for (std::size_t i = 0; i < values.members; ++i) {
      const double x = values.now[i * S + k];
      snap.marginal.add(x);
      if (opt.joint) snap.joint->add(x, values.delayed[i * S + k]);
    }
    out.push_back(std::move(snap));
  }
  return out;
}

std::vector<DensitySnapshot> evolve_ensemble(const HistorySource& source, std::size_t n, const dde::DdeField& field,
                                             std::span<const double> times, std::uint64_t seed,
                                             const EvolveOptions& opt) {
  return build_snapshots(collect_snapshot_values(source, n, field, times, seed, opt.threads, opt.component), opt);
}

std::vector<dde::Trajectory> run_trajectories(const HistorySource& source, std::size_t n, const dde::DdeField& field,
                                              double T, std::uint64_t seed, unsigned threads,
                                              std::size_t output_stride) {
  std::vector<dde::Trajectory> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      out[i] = dde::integrate(field, source(i), T, derive_seed(seed, {i, 1}), {output_stride});
    } catch (const DivergenceError& e) {
      throw tag(e, i);
    }
  });
  return out;
}

DensityPeriod detect_density_period(std::span<const DensitySnapshot> snapshots, double dt, double tol) {
  DensityPeriod out;
  const std::size_t S = snapshots.size();
  if (S < 4) return out;
  const std::size_t kmax = (S - 1) / 3;
  out.profile.assign(kmax + 1, 0.0);
  for (std::size_t k = 1; k <= kmax; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < S; ++i) s += l1_distance(snapshots[i].marginal, snapshots[i + k].marginal);
    out.profile[k] = s / static_cast<double>(S - k);
  }
  double mismatch = out.profile.size() > 1 ? out.profile[1] : 0.0;
  for (std::size_t k = 2; k <= kmax; ++k) {
    if (out.profile[k] < tol && out.profile[k] < 0.5 * mismatch) {
      out.lag = k;
      out.period = static_cast<double>(k) * dt;
      return out;
    }
    mismatch = std::min(mismatch, out.profile[k]);
  }
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientDataError("line fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("line fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssr += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : (ssr == 0.0 ? 1.0 : 0.0);
  return f;
}

MsdReport msd_curve(std::span<const dde::Trajectory> trajectories, double tau, int component) {
  if (trajectories.size() < 100) throw InsufficientDataError("MSD needs at least 100 trajectories");
  const auto& first = trajectories.front();
  const std::size_t len = first.size();
  for (const auto& tr : trajectories)
    if (tr.size() != len || tr.step != first.step) throw InsufficientDataError("trajectories differ in sampling");
  const double T = first.step * static_cast<double>(len - 1);
  if (T < 100.0 * tau - 1e-9) throw InsufficientDataError("MSD needs trajectories spanning >= 100 delays");
  const auto c = static_cast<std::size_t>(component);
  MsdReport rep;
  rep.t.resize(len);
  rep.msd.assign(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) rep.t[i] = first.step * static_cast<double>(i);
  for (const auto& tr : trajectories) {
    const double x0 = tr.states[0][c];
    for (std::size_t i = 0; i < len; ++i) {
      const double d = tr.states[i][c] - x0;
      rep.msd[i] += d * d;
    }
  }
  for (auto& v : rep.msd) v /= static_cast<double>(trajectories.size());
  const auto start = static_cast<std::size_t>(std::lower_bound(rep.t.begin(), rep.t.end(), 0.5 * T) - rep.t.begin());
  rep.tail = fit_line(std::span(rep.t).subspan(start), std::span(rep.msd).subspan(start));
  return rep;
}

VelocityStats velocity_stats(std::span<const dde::Trajectory> trajectories, double burn_in, int component,
                             std::size_t min_samples, std::size_t bins) {
  const auto c = static_cast<std::size_t>(component);
  VelocityStats st;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double sum = 0.0;
  for (const auto& tr : trajectories) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (tr.time(i) - tr.t0 < burn_in) continue;
      const double v = tr.states[i][c];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ++st.samples;
    }
  }
  if (st.samples < std::max<std::size_t>(min_samples, 2))
    throw InsufficientDataError("velocity statistics need " + std::to_string(min_samples) + " samples, got " +
                                std::to_string(st.samples));
  st.mean = sum / static_cast<double>(st.samples);
  double ss = 0.0;
  for (const auto& tr : trajectories)
    for (std::size_t i = 0; i < tr.size(); ++i)
      if (tr.time(i) - tr.t0 >= burn_in) ss += (tr.states[i][c] - st.mean) * (tr.states[i][c] - st.mean);
  st.std = std::sqrt(ss / static_cast<double>(st.samples));
  st.max_abs = std::max(std::abs(lo), std::abs(hi));
  if (hi > lo) {
    Histogram hist(lo, hi, bins);
    for (const auto& tr : trajectories)
      for (std::size_t i = 0; i < tr.size(); ++i)
        if (tr.time(i) - tr.t0 >= burn_in) hist.add(tr.states[i][c]);
    std::vector<double> x, y;
    const double span = hi - lo;
    for (std::size_t i = 0; i < bins; ++i) {
      const double mid = hist.bin_left(i) + 0.5 * hist.bin_width();
      if (mid < lo + 0.1 * span || mid > hi - 0.1 * span || hist.count(i) == 0) continue;
      x.push_back((mid - st.mean) * (mid - st.mean));
      y.push_back(std::log(hist.density(i)));
    }
    if (x.size() >= 2) {
      const auto fit = fit_line(x, y);
      st.fit_C = -fit.slope;
      st.fit_r2 = fit.r2;
    }
  }
  return st;
}

double brownian_bound(double beta, double gamma) {
  return 1.0 / (std::sqrt(gamma) * (0.68 * std::sqrt(beta) + 0.60 * std::sqrt(gamma)));
}

double brownian_sigma(double beta, double gamma) { return 0.32 / std::sqrt(beta * gamma); }

}  // namespace ddlab::ensemble
