#include "ddlab/kicked.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "ddlab/csv.hpp"
#include "ddlab/ensemble.hpp"
#include "ddlab/error.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/rng.hpp"

namespace ddlab::kicked {

double KickConfig::kappa_value() const { return kappa ? *kappa : std::sqrt(tau); }

ChaoticStream::ChaoticStream(const map::MapSpec& map, double xi0, std::uint64_t extension_seed)
    : map_(map), current_(xi0), ext_state_(extension_seed) {
  if (!(xi0 >= 0.0 && xi0 <= 1.0)) throw DomainError("xi0 must lie in [0, 1]");
  const auto* hat = std::get_if<map::Hat>(&map_);
  exact_ = hat != nullptr && hat->a == 2.0;
  if (!exact_) {
    map::validate(map_);
    return;
  }
  // Binary digits of theta = xi0 / 2; doubling and subtracting 1 are exact.
  double theta = 0.5 * xi0;
  std::size_t pos = 0;
  while (theta != 0.0) {
    theta *= 2.0;
    const bool bit = theta >= 1.0;
    if (bit) theta -= 1.0;
    if (pos % 64 == 0) words_.push_back(0);
    if (bit) words_.back() |= std::uint64_t{1} << (63 - pos % 64);
    ++pos;
  }
  if (pos % 64 != 0) {
    const std::uint64_t fill = splitmix64(ext_state_++);
    words_.back() |= fill & ((std::uint64_t{1} << (64 - pos % 64)) - 1);
  }
}

std::uint64_t ChaoticStream::window(std::size_t offset) {
  const std::size_t w = offset / 64;
  while (words_.size() < w + 2) words_.push_back(splitmix64(ext_state_++));
  const unsigned shift = offset % 64;
  if (shift == 0) return words_[w];
  return (words_[w] << shift) | (words_[w + 1] >> (64 - shift));
}

double ChaoticStream::next() {
  ++index_;
  if (!exact_) {
    current_ = map::apply_point(map_, current_);
    return current_;
  }
  const std::uint64_t w = window(index_);
  const std::uint64_t folded = (w >> 63) ? ~w + 1 : w;
  current_ = static_cast<double>(folded) * 0x1.0p-63;
  return current_;
}

KickedTrajectory evolve_kicked(const KickConfig& cfg, double x0, double v0, double xi0, std::size_t n_kicks,
                               std::uint64_t extension_seed) {
  if (!(cfg.gamma > 0.0) || !(cfg.tau > 0.0)) throw DomainError("kicked dynamics needs gamma > 0 and tau > 0");
  const double kappa = cfg.kappa_value();
  if (!(kappa > 0.0)) throw DomainError("kick scale must be positive");
  ChaoticStream stream(cfg.map, xi0, extension_seed);
  const double decay = std::exp(-cfg.gamma * cfg.tau);
  const double drift = -std::expm1(-cfg.gamma * cfg.tau) / cfg.gamma;
  KickedTrajectory tr;
  for (auto* v : {&tr.x, &tr.v, &tr.v_pre, &tr.xi}) v->reserve(n_kicks + 1);
  double x = x0, v = v0, xi = xi0;
  tr.x.push_back(x);
  tr.v.push_back(v);
  tr.v_pre.push_back(v);
  tr.xi.push_back(xi);
  for (std::size_t j = 1; j <= n_kicks; ++j) {
    x += v * drift;
    v *= decay;
    tr.v_pre.push_back(v);
    v += kappa * cfg.h(xi);
    xi = stream.next();
    tr.x.push_back(x);
    tr.v.push_back(v);
    tr.xi.push_back(xi);
  }
  return tr;
}

std::vector<double> fp_decay_check(const map::MapSpec& map, const map::GridFunction& h, int n) {
  if (n < 0) throw DomainError("fp_decay_check needs n >= 0");
  std::vector<double> norms{h.l1_norm()};
  map::GridFunction f = h;
  for (int t = 1; t <= n; ++t) {
    f = map::apply_fp_signed(map, f);
    norms.push_back(f.l1_norm());
  }
  return norms;
}

std::vector<double> fp_decay_check(const map::MapSpec& map, const std::function<double(double)>& h, int n,
                                   std::size_t cells) {
  return fp_decay_check(map, map::GridFunction::tabulate(0.0, 1.0, cells, h), n);
}

namespace {

constexpr double kGoldenConjugate = 0.6180339887498949;

double ks_normal(std::vector<double>& z) {
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  return d;
}

struct MemberSummary {
  double v_time = 0.0;   // sum of interval means of v
  double v2_time = 0.0;  // sum of interval means of v^2
  std::size_t intervals = 0;
  std::vector<double> post_kick;
  std::vector<double> disp2;
};

}  // namespace

OuSuiteReport ou_limit_suite(const OuSuiteOptions& opt) {
  if (opt.tau_list.empty() || opt.members == 0) throw DomainError("OU suite needs taus and members");
  for (std::size_t k = 1; k < opt.tau_list.size(); ++k)
    if (!(opt.tau_list[k] < opt.tau_list[k - 1])) throw DomainError("tau_list must be decreasing");
  if (!(opt.horizon > opt.burn_in)) throw DomainError("horizon must exceed burn-in");
  OuSuiteReport rep;
  for (double tau : opt.tau_list) {
    KickConfig cfg{opt.gamma, tau, std::nullopt, opt.map, opt.h};
    const auto n_kicks = static_cast<std::size_t>(std::llround(opt.horizon / tau));
    const std::size_t first = static_cast<std::size_t>(std::ceil(opt.burn_in / tau - 1e-9));
    const std::size_t stride = std::max<std::size_t>(1, n_kicks / 200);
    const double g = opt.gamma * tau;
    const double mean_factor = -std::expm1(-g) / g;
    const double sq_factor = -std::expm1(-2.0 * g) / (2.0 * g);

    std::vector<MemberSummary> members(opt.members);
    parallel_for(opt.members, opt.threads, [&](std::size_t i) {
      const double xi0 = std::fmod(0.5 + static_cast<double>(i + 1) * kGoldenConjugate, 1.0);
      const auto tr = evolve_kicked(cfg, 0.0, 0.0, xi0, n_kicks, derive_seed(0, {i}));
      auto& s = members[i];
      for (std::size_t j = first; j < n_kicks; ++j) {
        s.v_time += tr.v[j] * mean_factor;
        s.v2_time += tr.v[j] * tr.v[j] * sq_factor;
        ++s.intervals;
        s.post_kick.push_back(tr.v[j]);
      }
      for (std::size_t j = 0; j <= n_kicks; j += stride) {
        const double d = tr.x[j] - tr.x[0];
        s.disp2.push_back(d * d);
      }
    });

    double v = 0.0, v2 = 0.0;
    std::size_t count = 0;
    std::vector<double> z;
    for (const auto& s : members) {
      v += s.v_time;
      v2 += s.v2_time;
      count += s.intervals;
      z.insert(z.end(), s.post_kick.begin(), s.post_kick.end());
    }
    const double mean = v / static_cast<double>(count);
    OuRow row{tau, v2 / static_cast<double>(count) - mean * mean, 0.0, 0.0, 0.0};

    const double zm = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    double zs = 0.0;
    for (double x : z) zs += (x - zm) * (x - zm);
    zs = std::sqrt(zs / static_cast<double>(z.size()));
    for (auto& x : z) x = (x - zm) / zs;
    row.normality_stat = ks_normal(z);

    const std::size_t points = members.front().disp2.size();
    std::vector<double> t, msd(points, 0.0);
    for (std::size_t k = 0; k < points; ++k) t.push_back(static_cast<double>(k * stride) * tau);
    for (const auto& s : members)
      for (std::size_t k = 0; k < points; ++k) msd[k] += s.disp2[k];
    for (auto& m : msd) m /= static_cast<double>(opt.members);
    const double T = t.back();
    const auto start = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), 0.5 * T) - t.begin());
    const auto fit = ensemble::fit_line(std::span(t).subspan(start), std::span(msd).subspan(start));
    row.msd_slope = fit.slope;
    row.msd_r2 = fit.r2;
    rep.rows.push_back(row);
  }
  rep.normality_improves = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    const double prev = rep.rows[k - 1].var_v;
    rep.max_relative_step = std::max(rep.max_relative_step, std::abs(rep.rows[k].var_v - prev) / prev);
    if (rep.rows[k].normality_stat > rep.rows[k - 1].normality_stat + 0.01) rep.normality_improves = false;
  }
  rep.variance_cauchy = rep.max_relative_step < 0.1;
  return rep;
}

void write_csv(std::ostream& out, const OuSuiteReport& report) {
  csv::Writer w(out, {"tau", "var_v", "normality_stat", "msd_slope", "msd_r2"});
  for (const auto& r : report.rows) w.row({r.tau, r.var_v, r.normality_stat, r.msd_slope, r.msd_r2});
}

}  // namespace ddlab::kicked
