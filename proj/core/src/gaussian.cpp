#include "ddlab/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ddlab/csv.hpp"
#include "ddlab/error.hpp"
#include "ddlab/quadrature.hpp"
#include "ddlab/rng.hpp"

namespace ddlab::gaussian {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kEdgeTol = 1e-12;

// (e^x - 1 - x) / x^2
double phi2(double x) {
  if (std::abs(x) < 0.5) {
    double term = 0.5, sum = 0.5;
    for (int n = 3; n < 30; ++n) {
      term *= x / n;
      sum += term;
    }
    return sum;
  }
  return (std::expm1(x) - x) / (x * x);
}

// ((e^x - 1)^2 - 2 (e^x - 1 - x)) / (2 x^3) = sum_{n>=3} (2^n - 4) x^(n-3) / (2 n!)
double psi(double x) {
  if (std::abs(x) < 0.5) {
    double sum = 0.0;
    double xp = 1.0;
    double fact = 6.0;
    double pow2 = 8.0;
    for (int n = 3; n < 40; ++n) {
      sum += (pow2 - 4.0) / (2.0 * fact) * xp;
      xp *= x;
      fact *= n + 1;
      pow2 *= 2.0;
    }
    return sum;
  }
  const double e = std::expm1(x);
  return (e * e - 2.0 * (e - x)) / (2.0 * x * x * x);
}

// (e^{a q} - 1) / a, continuous at a = 0
double expm1_over(double a, double q) { return a == 0.0 ? q : std::expm1(a * q) / a; }

double canonical_s(double s, double tau) {
  if (s < -tau - kEdgeTol || s > kEdgeTol) throw DomainError("lag must lie in [-tau, 0]");
  return std::clamp(s, -tau, 0.0);
}

// Points r in [-tau, 0] where X(u - r - tau) is not smooth.
std::vector<double> x_breaks(double u, double tau) {
  std::vector<double> br;
  for (int k = 0; k < 64; ++k) {
    const double r = u - tau - k * tau;
    if (r < -tau) break;
    if (r <= 0.0) br.push_back(r);
  }
  return br;
}

quad::Result checked(quad::Result r, double tol, const char* what) {
  if (!r.converged) throw QuadratureError(r.error, tol, what);
  return r;
}

}  // namespace

CovKernel::CovKernel(KernelSpec spec) : spec_(std::move(spec)) {
  if (const auto* g = std::get_if<TabulatedGrid>(&spec_)) {
    if (g->n < 2 || g->values.size() != g->n * g->n || !(g->tau > 0.0))
      throw DomainError("tabulated kernel needs an n x n grid with n >= 2 and tau > 0");
  }
  if (const auto* uv = std::get_if<UVProduct>(&spec_)) {
    if (!uv->u || !uv->v) throw DomainError("UV kernel needs both u and v");
  }
}

double CovKernel::operator()(double s1, double s2) const {
  return std::visit(overloaded{
                        [&](const Cosine&) { return std::cos(s2 - s1); },
                        [&](const CosineDegenerate&) { return std::cos(s1) * std::cos(s2); },
                        [&](const BrownianMinPlusTau& k) { return std::min(s1, s2) + k.tau; },
                        [&](const UVProduct& k) {
                          return s1 <= s2 ? k.u(s1) * k.v(s2) : k.u(s2) * k.v(s1);
                        },
                        [&](const TabulatedGrid& g) {
                          const double scale = static_cast<double>(g.n - 1) / g.tau;
                          const auto locate = [&](double s, std::size_t& i, double& w) {
                            const double x = std::clamp((s + g.tau) * scale, 0.0, static_cast<double>(g.n - 1));
                            i = std::min(static_cast<std::size_t>(x), g.n - 2);
                            w = x - static_cast<double>(i);
                          };
                          std::size_t i, j;
                          double wi, wj;
                          locate(s1, i, wi);
                          locate(s2, j, wj);
                          const auto at = [&](std::size_t a, std::size_t b) { return g.values[a * g.n + b]; };
                          return (1 - wi) * ((1 - wj) * at(i, j) + wj * at(i, j + 1)) +
                                 wi * ((1 - wj) * at(i + 1, j) + wj * at(i + 1, j + 1));
                        },
                    },
                    spec_);
}

std::string CovKernel::name() const {
  return std::visit(overloaded{
                        [](const Cosine&) { return std::string("cosine"); },
                        [](const CosineDegenerate&) { return std::string("cosine-degenerate"); },
                        [](const BrownianMinPlusTau&) { return std::string("brownian"); },
                        [](const UVProduct&) { return std::string("uv"); },
                        [](const TabulatedGrid&) { return std::string("tabulated"); },
                    },
                    spec_);
}

bool CovKernel::kinked_on_diagonal() const noexcept {
  return std::holds_alternative<BrownianMinPlusTau>(spec_) || std::holds_alternative<UVProduct>(spec_);
}

std::vector<double> CovKernel::grid_lines() const {
  const auto* g = std::get_if<TabulatedGrid>(&spec_);
  if (!g || g->n < 3) return {};
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < g->n; ++i) out.push_back(-g->tau + g->tau * static_cast<double>(i) / static_cast<double>(g->n - 1));
  return out;
}

void validate_kernel(const CovKernel& kernel, double tau, std::size_t n) {
  if (n < 2) throw DomainError("kernel validation needs n >= 2");
  Eigen::MatrixXd gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double si = -tau + tau * static_cast<double>(i) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      const double sj = -tau + tau * static_cast<double>(j) / static_cast<double>(n - 1);
      const double a = kernel(si, sj);
      const double b = kernel(sj, si);
      if (std::abs(a - b) > 1e-12) throw KernelNotPsdError("kernel " + kernel.name() + " is not symmetric");
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw KernelNotPsdError("kernel " + kernel.name() + " has a negative Gram eigenvalue " +
                            csv::format(eig.eigenvalues().minCoeff()));
}

double fundamental_solution(const LinearDdeParams& p, double t) {
  if (t < 0.0) return 0.0;
  if (t > 50.0 * p.tau) throw DomainError("fundamental solution is evaluated for t <= 50 tau only");
  const auto K = static_cast<int>(std::floor(t / p.tau));
  double sum = 0.0;
  double comp = 0.0;
  const auto add = [&](double term) {
    const double s = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - s) + term : (term - s) + sum;
    sum = s;
  };
  add(std::exp(p.a * t));
  if (p.b != 0.0) {
    const double logb = std::log(std::abs(p.b));
    for (int k = 1; k <= K; ++k) {
      const double q = t - k * p.tau;
      if (!(q > 0.0)) break;
      const double logmag = k * logb - std::lgamma(k + 1.0) + k * std::log(q) + p.a * q;
      if (logmag < -745.0) continue;
      const double sign = (p.b < 0.0 && (k & 1)) ? -1.0 : 1.0;
      add(sign * std::exp(logmag));
    }
  }
  return sum + comp;
}

double r_t(const CovKernel& kernel, const LinearDdeParams& p, double t, double s1, double s2, const RtOptions& opt) {
  if (!(t >= 0.0)) throw DomainError("r_t needs t >= 0");
  s1 = canonical_s(s1, p.tau);
  s2 = canonical_s(s2, p.tau);
  if (s1 > s2) std::swap(s1, s2);
  const double u1 = t + s1;
  const double u2 = t + s2;
  if (u2 <= 0.0) return kernel(u1, u2);

  const double tau = p.tau;
  const double b = p.b;
  const double tol = opt.abs_tol;
  const bool diag = kernel.kinked_on_diagonal();
  const auto lines = kernel.grid_lines();
  const auto X = [&](double s) { return fundamental_solution(p, s); };
  quad::SimpsonOptions single;
  single.abs_tol = b == 0.0 ? tol : tol / (4.0 * std::abs(b));

  // b * int X(u - r - tau) R0(s, r) dr over r in [-tau, min(0, u - tau)]
  const auto drive = [&](double u, double s) {
    if (b == 0.0 || u - tau <= -tau) return 0.0;
    auto br = x_breaks(u, tau);
    br.insert(br.end(), lines.begin(), lines.end());
    if (diag) br.push_back(s);
    const auto f = [&](double r) { return X(u - r - tau) * kernel(s, r); };
    return b * checked(quad::simpson_piecewise(f, -tau, std::min(0.0, u - tau), br, single), single.abs_tol,
                       "r_t single integral").value;
  };

  if (u1 <= 0.0) return X(u2) * kernel(u1, 0.0) + drive(u2, u1);

  const double X1 = X(u1);
  const double X2 = X(u2);
  double total = X1 * X2 * kernel(0.0, 0.0) + X1 * drive(u2, 0.0) + X2 * drive(u1, 0.0);
  if (b != 0.0) {
    const double hi1 = std::min(0.0, u1 - tau);
    const double hi2 = std::min(0.0, u2 - tau);
    if (hi1 > -tau && hi2 > -tau) {
      quad::SimpsonOptions outer;
      outer.abs_tol = tol / (4.0 * b * b);
      quad::SimpsonOptions inner;
      inner.abs_tol = outer.abs_tol / (2.0 * tau);
      auto br2 = x_breaks(u2, tau);
      br2.insert(br2.end(), lines.begin(), lines.end());
      auto br1 = x_breaks(u1, tau);
      br1.insert(br1.end(), br2.begin(), br2.end());
      const auto g = [&](double r1) {
        auto br = br2;
        if (diag) br.push_back(r1);
        const auto f = [&](double r2) { return X(u2 - r2 - tau) * kernel(r1, r2); };
        const auto in = checked(quad::simpson_piecewise(f, -tau, hi2, br, inner), inner.abs_tol,
                                "r_t inner integral");
        return X(u1 - r1 - tau) * in.value;
      };
      total += b * b * checked(quad::simpson_piecewise(g, -tau, hi1, br1, outer), outer.abs_tol,
                               "r_t outer integral").value;
    }
  }
  return total;
}

std::vector<Sigma2Point> sigma2_curve(const CovKernel& kernel, const LinearDdeParams& p, double T, double dt,
                                      const RtOptions& opt) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw DomainError("sigma2_curve needs dt > 0 and T >= 0");
  const auto K = static_cast<std::size_t>(std::llround(T / dt));
  const auto cross = [&](double s) { return r_t(kernel, p, s, -p.tau, 0.0, opt); };
  // Times where the cross covariance has a kink: multiples of tau and, for a
  // tabulated kernel, its grid lines shifted by tau.
  std::vector<double> kinks;
  for (double k = 1.0; k * p.tau < T + p.tau; k += 1.0) kinks.push_back(k * p.tau);
  for (double g : kernel.grid_lines()) kinks.push_back(p.tau + g);
  std::sort(kinks.begin(), kinks.end());
  const auto kinks_in = [&](double lo, double hi) {
    auto first = std::upper_bound(kinks.begin(), kinks.end(), lo);
    auto last = std::lower_bound(first, kinks.end(), hi);
    return std::span<const double>(first, last);
  };
  // Adaptive Simpson on [lo, hi] of e^{2a(t1 - s)} c(s), t1 the right end of
  // the step, seeded with the endpoint values already computed. The step
  // tolerance is the step's share of the budget over [0, T].
  const double budget = opt.abs_tol / (4.0 * std::max(std::abs(p.b), 1e-300) * std::max(T, p.tau));
  const auto integrate = [&](double lo, double hi, double t1, double clo, double chi) {
    const auto f = [&](double s) { return std::exp(2.0 * p.a * (t1 - s)) * cross(s); };
    const double flo = std::exp(2.0 * p.a * (t1 - lo)) * clo;
    const double fhi = std::exp(2.0 * p.a * (t1 - hi)) * chi;
    const double fm = f(0.5 * (lo + hi));
    quad::Result acc;
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    const double v = quad::detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, budget * (hi - lo), 30, 0,
                                                acc, 1'000'000);
    if (!acc.converged)
      throw QuadratureError(acc.error, budget * (hi - lo), "sigma2 time integral did not converge");
    return v;
  };

  std::vector<Sigma2Point> out(K + 1);
  std::vector<double> c(K + 1);
  for (std::size_t k = 0; k <= K; ++k) c[k] = cross(static_cast<double>(k) * dt);
  out[0] = {0.0, kernel(0.0, 0.0), c[0], 0.0};
  for (std::size_t k = 0; k < K; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    const double t1 = static_cast<double>(k + 1) * dt;
    double integral = 0.0;
    double lo = t0;
    double clo = c[k];
    for (double x : kinks_in(t0, t1)) {
      const double cx = cross(x);
      integral += integrate(lo, x, t1, clo, cx);
      lo = x;
      clo = cx;
    }
    integral += integrate(lo, t1, t1, clo, c[k + 1]);
    out[k + 1] = {t1, std::exp(2.0 * p.a * dt) * out[k].sigma2 + 2.0 * p.b * integral, c[k + 1], 0.0};
  }

  // Finite-difference residual; stencils never straddle a kink.
  const auto crosses = [&](double lo, double hi) { return !kinks_in(lo, hi).empty(); };
  for (std::size_t k = 0; k <= K && K >= 2; ++k) {
    const double t = out[k].t;
    const auto f = [&](std::size_t i) { return out[i].sigma2; };
    double d;
    const bool can_center = k >= 1 && k + 1 <= K && !crosses(t - dt, t + dt);
    const bool can_forward = k + 2 <= K && !crosses(t, t + 2.0 * dt);
    if (can_center) {
      d = (f(k + 1) - f(k - 1)) / (2.0 * dt);
    } else if (can_forward || k < 2) {
      d = (-3.0 * f(k) + 4.0 * f(k + 1) - f(k + 2)) / (2.0 * dt);
    } else {
      d = (3.0 * f(k) - 4.0 * f(k - 1) + f(k - 2)) / (2.0 * dt);
    }
    out[k].residual = std::abs(d - 2.0 * p.a * out[k].sigma2 - 2.0 * p.b * out[k].cross);
  }
  return out;
}

WienerClosedForm wiener_closed_form(const LinearDdeParams& p, double t) {
  if (!(t >= 0.0 && t <= p.tau)) throw DomainError("Wiener closed form needs 0 <= t <= tau");
  const double x = p.a * t;
  const double eat = std::exp(x);
  WienerClosedForm r;
  r.cross = t * eat + p.b * t * t * phi2(x);
  r.sigma2 = eat * eat * p.tau + 2.0 * p.b * eat * t * t * phi2(x) + p.b * p.b * t * t * t * psi(x);
  return r;
}

double factorized_sigma2_wiener(const LinearDdeParams& p, double t) {
  if (!(t >= 0.0 && t <= p.tau)) throw DomainError("factorized form needs 0 <= t <= tau");
  const double eat = std::exp(p.a * t);
  const auto S = [&](double r) {
    const double q = std::max(0.0, t - r - p.tau);
    return eat + p.b * expm1_over(p.a, q);
  };
  const auto f = [&](double r) { return S(r) * S(r); };
  const double brk[] = {t - p.tau};
  quad::SimpsonOptions o;
  o.abs_tol = 1e-12;
  return checked(quad::simpson_piecewise(f, -p.tau, 0.0, brk, o), o.abs_tol, "factorized sigma2").value;
}

StabilityClass hayes_stable(const LinearDdeParams& p) {
  if (!(p.tau > 0.0)) throw DomainError("Hayes criterion needs tau > 0");
  const double A = p.a * p.tau;
  const double B = p.b * p.tau;
  StabilityClass out{Stability::Unstable, std::numeric_limits<double>::quiet_NaN(), {1.0 - A, -(B + A), 0.0}};
  if (A > 1.0) {
    out.margins[2] = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double kappa;
  if (A == 0.0) {
    kappa = std::numbers::pi / 2;
  } else if (A == 1.0) {
    kappa = 0.0;
  } else {
    const auto g = [A](double k) { return k * std::cos(k) - A * std::sin(k); };
    double lo = A > 0.0 ? 0.0 : std::numbers::pi / 2;
    double hi = A > 0.0 ? std::numbers::pi / 2 : std::numbers::pi;
    // g > 0 at lo (near 0 it behaves as k (1 - A)), g < 0 at hi
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    kappa = 0.5 * (lo + hi);
  }
  out.kappa = kappa;
  out.margins[2] = B + A * std::cos(kappa) + kappa * std::sin(kappa);
  const double eps = 1e-10;
  const bool negative = std::any_of(out.margins.begin(), out.margins.end(), [&](double m) { return m < -eps; });
  const bool zero = std::any_of(out.margins.begin(), out.margins.end(), [&](double m) { return std::abs(m) <= eps; });
  out.verdict = negative ? Stability::Unstable : zero ? Stability::Boundary : Stability::Stable;
  return out;
}

Eigen::Matrix2d GaussianState::Q() const {
  Eigen::Matrix2d q;
  q << sigma2_t, cross, cross, sigma2_lag;
  return q;
}

GaussianState GaussianState::scaled(double factor) const {
  return {t, sigma2_t * factor, sigma2_lag * factor, cross * factor};
}

GaussianState gaussian_state(const CovKernel& kernel, const LinearDdeParams& p, double t, const RtOptions& opt) {
  GaussianState s;
  s.t = t;
  s.sigma2_t = r_t(kernel, p, t, 0.0, 0.0, opt);
  s.sigma2_lag = r_t(kernel, p, t, -p.tau, -p.tau, opt);
  s.cross = r_t(kernel, p, t, -p.tau, 0.0, opt);
  return s;
}

double marginal_density(const GaussianState& s, double x) {
  if (!(s.sigma2_t > kDegenerateTol)) throw DegenerateMeasureError("variance of x(t) is zero");
  return std::exp(-x * x / (2.0 * s.sigma2_t)) / std::sqrt(2.0 * std::numbers::pi * s.sigma2_t);
}

double joint_density(const GaussianState& s, double x, double y) {
  const double det = s.sigma2_t * s.sigma2_lag - s.cross * s.cross;
  if (!(det > kDegenerateTol)) throw DegenerateMeasureError("(x(t), x(t - tau)) is concentrated on a line");
  const double q = s.sigma2_lag * x * x - 2.0 * s.cross * x * y + s.sigma2_t * y * y;
  return std::exp(-q / (2.0 * det)) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double conditional_mean_check(const GaussianState& s, double x) {
  const double det = s.sigma2_t * s.sigma2_lag - s.cross * s.cross;
  if (!(det > kDegenerateTol)) throw DegenerateMeasureError("(x(t), x(t - tau)) is concentrated on a line");
  const double mu = s.cross / s.sigma2_t * x;
  const double sd = std::sqrt(det / s.sigma2_t);
  quad::SimpsonOptions o;
  o.abs_tol = 1e-10;
  o.min_depth = 4;
  const auto f = [&](double y) { return y * joint_density(s, x, y); };
  const double brk[] = {mu};
  const auto r = checked(quad::simpson_piecewise(f, mu - 14.0 * sd, mu + 14.0 * sd, brk, o), o.abs_tol,
                         "conditional mean");
  return std::abs(r.value - mu * marginal_density(s, x));
}

namespace {

std::vector<double> nodes(int m, double tau) {
  std::vector<double> s(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) s[static_cast<std::size_t>(k)] = -tau + tau * k / m;
  s.back() = 0.0;
  return s;
}

std::shared_ptr<const Eigen::MatrixXd> cholesky(const CovKernel& kernel, const std::vector<double>& s) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = kernel(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
  gram.diagonal().array() += 1e-12;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw KernelNotPsdError("Cholesky factorization failed for kernel " + kernel.name());
  return std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
}

}  // namespace

HistorySampler::HistorySampler(CovKernel kernel, int m, double tau) : kernel_(std::move(kernel)), m_(m), tau_(tau) {
  if (m < 2) throw DomainError("history sampling needs m >= 2");
  if (!(tau > 0.0)) throw DomainError("history sampling needs tau > 0");
  if (const auto* w = std::get_if<BrownianMinPlusTau>(&kernel_.spec()))
    if (w->tau < tau) throw DomainError("Wiener kernel needs kernel tau >= history tau");
  if (std::holds_alternative<TabulatedGrid>(kernel_.spec())) chol_ = cholesky(kernel_, nodes(m, tau));
}

dde::History HistorySampler::operator()(std::uint64_t seed) const {
  Rng rng(seed);
  const auto s = nodes(m_, tau_);
  std::vector<double> v(s.size());
  std::visit(overloaded{
                 [&](const Cosine&) {
                   const double zeta = std::sqrt(-2.0 * std::log(rng.uniform_open0()));
                   const double theta = 2.0 * std::numbers::pi * rng.uniform();
                   for (std::size_t i = 0; i < s.size(); ++i) v[i] = zeta * std::cos(s[i] - theta);
                 },
                 [&](const CosineDegenerate&) {
                   const double z = rng.normal();
                   for (std::size_t i = 0; i < s.size(); ++i) v[i] = z * std::cos(s[i]);
                 },
                 [&](const BrownianMinPlusTau& k) {
                   double w = std::sqrt(k.tau - tau_) * rng.normal();
                   v[0] = w;
                   for (std::size_t i = 1; i < s.size(); ++i) {
                     w += std::sqrt(s[i] - s[i - 1]) * rng.normal();
                     v[i] = w;
                   }
                 },
                 [&](const UVProduct& k) {
                   double prev = 0.0;
                   double w = 0.0;
                   for (std::size_t i = 0; i < s.size(); ++i) {
                     const double g = k.u(s[i]) / k.v(s[i]);
                     if (g < prev - 1e-14) throw DomainError("UV kernel needs u / v non-decreasing");
                     w += std::sqrt(std::max(0.0, g - prev)) * rng.normal();
                     prev = std::max(prev, g);
                     v[i] = k.v(s[i]) * w;
                   }
                 },
                 [&](const TabulatedGrid&) {
                   Eigen::VectorXd z(static_cast<Eigen::Index>(s.size()));
                   for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
                   const Eigen::VectorXd x = (*chol_) * z;
                   for (std::size_t i = 0; i < s.size(); ++i) v[i] = x(static_cast<Eigen::Index>(i));
                 },
             },
             kernel_.spec());
  return dde::History::from_values(tau_, m_, v);
}

dde::History sample_gaussian_history(const CovKernel& kernel, int m, double tau, std::uint64_t seed) {
  return HistorySampler(kernel, m, tau)(seed);
}

TabulatedGrid load_tabulated_kernel(const std::string& path) {
  const auto t = csv::read_file(path);
  const auto c1 = t.column("s1");
  const auto c2 = t.column("s2");
  const auto cr = t.column("R");
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(t.rows.size()))));
  if (n < 2 || n * n != t.rows.size()) throw IoError(path + ": expected a full square grid of (s1, s2)");
  double lo = 0.0;
  for (const auto& r : t.rows) lo = std::min({lo, r[c1], r[c2]});
  TabulatedGrid g{-lo, n, std::vector<double>(n * n, std::numeric_limits<double>::quiet_NaN())};
  if (!(g.tau > 0.0)) throw IoError(path + ": grid must span [-tau, 0] with tau > 0");
  const double scale = static_cast<double>(n - 1) / g.tau;
  for (const auto& r : t.rows) {
    const double x = (r[c1] + g.tau) * scale;
    const double y = (r[c2] + g.tau) * scale;
    const double ix = std::round(x), iy = std::round(y);
    if (std::abs(x - ix) > 1e-6 || std::abs(y - iy) > 1e-6 || ix < 0 || iy < 0 || ix > n - 1 || iy > n - 1)
      throw IoError(path + ": point off the uniform grid");
    g.values[static_cast<std::size_t>(ix) * n + static_cast<std::size_t>(iy)] = r[cr];
  }
  for (double v : g.values)
    if (std::isnan(v)) throw IoError(path + ": grid has missing points");
  return g;
}

}  // namespace ddlab::gaussian
