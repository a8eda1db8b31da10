// One line per acceptance criterion: [PASS] or [FAIL], the measured value
// against its pinned tolerance, and the wall time. Heavy criteria go through
// the same runner the CLI uses, driven by the shipped recipes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ddlab/config.hpp"
#include "ddlab/csv.hpp"
#include "ddlab/dde.hpp"
#include "ddlab/gaussian.hpp"
#include "ddlab/kicked.hpp"
#include "ddlab/map_density.hpp"
#include "ddlab/rng.hpp"
#include "ddlab/runner.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ddlab;

namespace {

// Pinned tolerances.
constexpr double kExactL1 = 1e-3;
constexpr int kExactIterations = 30;
constexpr double kPeriodTol = 1e-4;
constexpr double kMsdR2 = 0.95;
constexpr double kSigmaRel = 0.20;
constexpr double kBoundFactor = 1.2;
constexpr double kWienerQuad = 1e-8;
constexpr double kCosineVar = 1e-9;
constexpr double kMcSigmas = 3.0;
constexpr double kResidual = 1e-5;
constexpr double kHayesSkip = 1e-6;
constexpr double kFundamental = 1e-6;
constexpr double kCosineSolution = 1e-5;
constexpr double kCauchy = 0.10;
constexpr double kAnnihilation = 1e-12;

struct Outcome {
  Outcome() = default;
  Outcome(bool p, std::string d) : pass(p), detail(std::move(d)) {}
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // informational, never affect the verdict
};

struct Context {
  unsigned threads = 8;
  fs::path work;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

config::RunConfig recipe(const std::string& name) {
  return config::parse_config_file(std::string(DDLAB_RECIPE_DIR) + "/" + name);
}

void set(config::RunConfig& c, const std::string& section, const std::string& key, config::Value v) {
  c.sections[section][key] = config::Entry{std::move(v), 0};
}

runner::RunManifest run_in(const Context& ctx, config::RunConfig c, const std::string& tag, unsigned threads) {
  set(c, "output", "dir", (ctx.work / tag).string());
  runner::RunOptions o;
  o.threads = threads;
  return runner::run(c, o);
}

csv::Table table(const runner::RunManifest& m, const std::string& file) {
  return csv::read_file((fs::path(m.directory) / file).string());
}

struct EnsemblePeriod {
  bool detected = false;
  std::size_t lag = 0;
  double period = 0.0;
  double x_max = 0.0;  // upper edge of the histogram range
  double lag1_l1 = 0.0;
  std::size_t closest_lag = 0;  // lag >= 2 with the smallest mean L1 distance
  double closest_l1 = 0.0;
};

EnsemblePeriod ensemble_period(const runner::RunManifest& m) {
  const auto t = table(m, "period.csv");
  EnsemblePeriod r;
  r.detected = t.rows[0][t.column("detected")] != 0.0;
  r.lag = static_cast<std::size_t>(t.rows[0][t.column("lag")]);
  r.period = t.rows[0][t.column("period")];
  const auto s = table(m, "snapshot_0000.csv");
  r.x_max = s.rows.back()[s.column("bin_right")];
  const auto prof = table(m, "period_profile.csv");
  r.closest_l1 = std::numeric_limits<double>::infinity();
  for (const auto& row : prof.rows) {
    if (row[prof.column("lag")] == 1.0) r.lag1_l1 = row[prof.column("mean_l1")];
    if (row[prof.column("lag")] >= 2.0 && row[prof.column("mean_l1")] < r.closest_l1) {
      r.closest_l1 = row[prof.column("mean_l1")];
      r.closest_lag = static_cast<std::size_t>(row[prof.column("lag")]);
    }
  }
  return r;
}

std::string describe(const EnsemblePeriod& p) {
  if (p.detected) return fmt("period %.4g (lag %zu)", p.period, p.lag);
  return fmt("no period (mean L1 %.3f at lag 1, closest return %.3f at lag %zu)", p.lag1_l1, p.closest_l1, p.closest_lag);
}

// 1. Exactness of the full tent map.
Outcome hat_exactness(const Context&) {
  constexpr std::size_t cells = 4096;
  const map::FpStepper step(map::Hat{2.0}, cells);
  const auto uniform = map::GridDensity::uniform(0.0, 1.0, cells);
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    Rng rng(derive_seed(2024, {trial}));
    std::vector<double> v(cells);
    for (auto& x : v) x = 0.05 + rng.uniform();
    auto f = map::GridDensity(0.0, 1.0, std::move(v)).normalized();
    for (int k = 0; k < kExactIterations; ++k) f = step(f);
    worst = std::max(worst, map::l1_distance(f, uniform));
  }
  return {worst < kExactL1, fmt("max L1 to uniform after %d steps = %.3e (< %.0e)", kExactIterations, worst, kExactL1)};
}

// 2. Asymptotic periods 1, 2, 4.
Outcome period_windows(const Context&) {
  const std::pair<double, int> cases[] = {{1.8, 1}, {1.3, 2}, {1.15, 4}};
  bool ok = true;
  std::string d;
  for (const auto& [a, want] : cases) {
    map::PeriodOptions po;
    po.tol = kPeriodTol;
    const auto rep = map::detect_asymptotic_period(map::Hat{a}, map::GridDensity::uniform(0.0, 1.0, 1024), po);
    const int got = rep.period.value_or(0);
    ok = ok && got == want;
    d += fmt("a=%.2f -> %d (want %d)  ", a, got, want);
  }
  return {ok, d + fmt("tol %.0e", kPeriodTol)};
}

// 3. Delayed tent map: both initial ensembles show the same finite period.
Outcome fig1(const Context& ctx) {
  const auto a = ensemble_period(run_in(ctx, recipe("fig1a.ini"), "fig1a", ctx.threads));
  const auto b = ensemble_period(run_in(ctx, recipe("fig1b.ini"), "fig1b", ctx.threads));
  Outcome o;
  o.pass = a.detected && b.detected && a.lag == b.lag;
  o.detail = "uniform ensemble: " + describe(a) + ", mixture: " + describe(b) + fmt(", histogram upper edge %.3g", a.x_max);
  // Same protocol with alpha and a exchanged and a longer window, so that
  // three candidate periods fit into the snapshot sequence.
  for (const char* name : {"fig1a.ini", "fig1b.ini"}) {
    auto c = recipe(name);
    set(c, "params", "alpha", 10.0);
    set(c, "params", "a", 13.0);
    set(c, "output", "t_end", 407.0);
    const auto p = ensemble_period(run_in(ctx, c, std::string("swapped_") + name, ctx.threads));
    o.notes.push_back(fmt("%s with alpha=10, a=13 on [400, 407]: ", name) + describe(p));
  }
  return o;
}

// 4. Noisy Keener delay equation: weak noise stable, stronger noise periodic.
Outcome fig2(const Context& ctx) {
  const auto run = [&](const char* name) {
    auto c = recipe(name);
    set(c, "output", "joint", false);
    return ensemble_period(run_in(ctx, c, name, ctx.threads));
  };
  const auto weak = run("fig2b.ini");
  const auto strong = run("fig2c.ini");
  Outcome o;
  o.pass = !weak.detected && strong.detected;
  o.detail = "noise [0,0.1]: " + describe(weak) + " (want none), noise [0,0.2]: " + describe(strong) + " (want finite)";
  // The bracket a x(t - tau) + b + xi reaches at most this value; below 1 the
  // mod never acts and the equation is linear in the state.
  o.notes.push_back(fmt("largest bracket value 0.5 x + 0.567 + xi: %.4f (0.1 noise), %.4f (0.2 noise)",
                        0.5 * weak.x_max + 0.567 + 0.1, 0.5 * strong.x_max + 0.567 + 0.2));
  return o;
}

// 5. Deterministic Brownian motion laws.
Outcome brownian(const Context& ctx) {
  const auto m = run_in(ctx, recipe("fig3.ini"), "fig3", ctx.threads);
  const auto t = table(m, "summary.csv");
  const auto& r = t.rows[0];
  const double beta = 10.0, gamma = 1.0;
  const double sigma = 0.32 / std::sqrt(beta * gamma);
  const double K = 1.0 / (std::sqrt(gamma) * (0.68 * std::sqrt(beta) + 0.60 * std::sqrt(gamma)));
  const double r2 = r[t.column("msd_r2")], sd = r[t.column("std")], vmax = r[t.column("max_abs")];
  const bool ok = r2 > kMsdR2 && std::abs(sd - sigma) <= kSigmaRel * sigma && vmax <= kBoundFactor * K;
  return {ok, fmt("MSD R2 %.4f (> %.2f), std %.4f vs %.4f (within %.0f%%), max|v| %.4f (<= %.1f K = %.4f)", r2, kMsdR2, sd,
                  sigma, 100 * kSigmaRel, vmax, kBoundFactor, kBoundFactor * K)};
}

// 6. Wiener closed forms against quadrature; cosine process variance.
Outcome analytic_core(const Context&) {
  const gaussian::LinearDdeParams w{0.0, -1.0, 1.0};
  const gaussian::CovKernel wk = gaussian::BrownianMinPlusTau{1.0};
  const auto cf = gaussian::wiener_closed_form(w, 1.0);
  const double dq = std::max(std::abs(gaussian::r_t(wk, w, 1.0, -1.0, 0.0) - cf.cross),
                             std::abs(gaussian::r_t(wk, w, 1.0, 0.0, 0.0) - cf.sigma2));
  const double dx = std::max(std::abs(cf.cross - 0.5), std::abs(cf.sigma2 - 1.0 / 3.0));
  const gaussian::LinearDdeParams c{0.0, -1.0, std::numbers::pi / 2};
  double dv = 0.0;
  for (int k = 0; k <= 16; ++k) dv = std::max(dv, std::abs(gaussian::r_t(gaussian::Cosine{}, c, k * std::numbers::pi / 8, 0.0, 0.0) - 1.0));
  const bool ok = dx < 1e-14 && dq < kWienerQuad && dv < kCosineVar;
  return {ok, fmt("closed form (%.6g, %.6g) vs (1/2, 1/3), quadrature gap %.2e (< %.0e), cosine |var-1| %.2e (< %.0e)", cf.cross,
                  cf.sigma2, dq, kWienerQuad, dv, kCosineVar)};
}

// 7. Monte Carlo variance against the analytic variance.
Outcome monte_carlo(const Context& ctx) {
  bool ok = true;
  std::string d;
  for (const char* kernel : {"cosine", "brownian"}) {
    auto c = recipe("compare_brownian.ini");
    set(c, "params", "kernel", std::string(kernel));
    const auto t = table(run_in(ctx, c, std::string("compare_") + kernel, ctx.threads), "compare.csv");
    double worst = 0.0;
    for (const auto& r : t.rows)
      worst = std::max(worst, std::abs(r[t.column("sigma2_mc")] - r[t.column("sigma2_analytic")]) / r[t.column("mc_stderr")]);
    ok = ok && worst <= kMcSigmas;
    d += fmt("%s: max |mc - analytic| = %.2f s.e.  ", kernel, worst);
  }
  return {ok, d + fmt("(<= %.0f)", kMcSigmas)};
}

// 8. Residual of the variance evolution equation.
Outcome sigma2_residual(const Context&) {
  constexpr double tau = 1.0;
  gaussian::TabulatedGrid tab{tau, 17, {}};
  for (std::size_t i = 0; i < tab.n; ++i)
    for (std::size_t j = 0; j < tab.n; ++j) {
      const double s1 = -tau + tau * i / 16.0, s2 = -tau + tau * j / 16.0;
      tab.values.push_back(std::exp(-std::abs(s1 - s2)));
    }
  const std::vector<gaussian::CovKernel> kernels{
      gaussian::Cosine{}, gaussian::CosineDegenerate{}, gaussian::BrownianMinPlusTau{tau},
      gaussian::UVProduct{[](double s) { return (s + tau) * (s + tau); }, [](double s) { return 1.0 + 0.5 * (s + tau); }}, tab};
  double worst = 0.0;
  std::string d;
  for (const auto& k : kernels) {
    double w = 0.0;
    for (const auto& pt : gaussian::sigma2_curve(k, {0.5, -1.0, tau}, 2.0 * tau, 1e-3)) w = std::max(w, pt.residual);
    worst = std::max(worst, w);
    d += fmt("%s %.1e  ", k.name().c_str(), w);
  }
  return {worst < kResidual, d + fmt("(< %.0e)", kResidual)};
}

// 9. Hayes classifier against root counting.
Outcome hayes(const Context&) {
  int agree = 0, skipped = 0, checked = 0;
  std::string first_miss;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      const gaussian::LinearDdeParams p{-3.0 + 0.2 * i, -3.0 + 0.2 * j, 1.0};
      const auto h = gaussian::hayes_stable(p);
      const double closest = std::min({std::abs(h.margins[0]), std::abs(h.margins[1]), std::abs(h.margins[2])});
      if (h.verdict == gaussian::Stability::Boundary || closest < kHayesSkip) {
        ++skipped;
        continue;
      }
      ++checked;
      const bool stable = oracle::unstable_root_count(p.a, p.b, p.tau) == 0;
      if (stable == (h.verdict == gaussian::Stability::Stable)) {
        ++agree;
      } else if (first_miss.empty()) {
        first_miss = fmt(", first disagreement at (%.1f, %.1f)", p.a, p.b);
      }
    }
  return {agree == checked, fmt("%d/%d cells agree, %d boundary cells skipped", agree, checked, skipped) + first_miss};
}

// 10. Integrator against the fundamental solution and the cosine solution.
Outcome integrator(const Context&) {
  double fund = 0.0;
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {-1.0, 0.5}, {0.5, -1.0}}) {
    const auto tr = dde::integrate(dde::LinearDde{a, b}, dde::History::fundamental(1.0, 512), 4.0);
    for (std::size_t i = 0; i < tr.size(); ++i)
      fund = std::max(fund, std::abs(tr.states[i][0] - gaussian::fundamental_solution({a, b, 1.0}, tr.time(i))));
  }
  const double tau = std::numbers::pi / 2;
  const auto hist = dde::History::from_function(tau, 512, 1, [](double s) { return dde::State{std::cos(s), 0.0}; });
  const auto tr = dde::integrate(dde::LinearDde{0.0, -1.0}, hist, 8.0 * std::numbers::pi);
  double cosr = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) cosr = std::max(cosr, std::abs(tr.states[i][0] - std::cos(tr.time(i))));
  return {fund <= kFundamental && cosr <= kCosineSolution,
          fmt("fundamental solution max gap %.2e (<= %.0e), cosine residual over 4 periods %.2e (<= %.0e)", fund, kFundamental, cosr,
              kCosineSolution)};
}

// 11. Chaotic kicks approach an Ornstein-Uhlenbeck process.
Outcome kicked_ou(const Context& ctx) {
  kicked::OuSuiteOptions o;
  o.threads = ctx.threads;
  const auto rep = kicked::ou_limit_suite(o);
  const double p1 = kicked::fp_decay_check(map::Hat{2.0}, o.h, 1, 4096)[1];
  std::string vars;
  for (const auto& r : rep.rows) vars += fmt("%.4f ", r.var_v);
  return {rep.max_relative_step < kCauchy && p1 < kAnnihilation,
          "var_v " + vars + fmt("max relative step %.3f (< %.2f), ||P(x - 1/2)||_1 = %.1e (< %.0e)", rep.max_relative_step, kCauchy,
                                p1, kAnnihilation)};
}

// 12. Output hashes do not depend on the thread count.
Outcome determinism(const Context& ctx) {
  std::vector<std::pair<std::string, std::string>> small{
      {"map-iterate", "kind = map-iterate\n[params]\nmap = hat\na = 1.3\ncells = 512\nn_iter = 40\ndetect_period = true\n"},
      {"dde-ensemble",
       "kind = dde-ensemble\n[params]\nsystem = keener\nalpha = 10\na = 0.5\nb = 0.567\nnoise_hi = 0.2\nm = 32\n"
       "[ensemble]\nspec = mixture\nblocks = [0.65, 0.75, 150, 0.35, 0.45, 50]\nn = 200\n"
       "[output]\nt_start = 10\nt_end = 11\nsnapshot_step = 0.125\nbins = 20\n"},
      {"gaussian", "kind = gaussian\n[params]\nkernel = brownian\na = 0\nb = -1\ntau = 1\nT = 2\ndt = 0.05\n"},
      {"brownian", "kind = brownian\n[params]\nbeta = 10\nm = 32\nT = 120\nburn_in = 20\n[ensemble]\nn = 100\n"
                   "[output]\nstride = 8\nmin_samples = 1000\n"},
      {"kicked", "kind = kicked\n[params]\ntau_list = [0.2, 0.1]\nhorizon = 20\nmembers = 64\n"},
      {"compare", "kind = compare\n[params]\nkernel = cosine\na = 0\nb = -1\ntau = 1\nm = 64\ntimes = [0.5, 1]\n[ensemble]\nn = 4000\n"},
  };
  const unsigned many = std::max(2u, ctx.threads);
  std::set<std::string> differing;
  std::size_t files = 0;
  for (const auto& [kind, text] : small) {
    const auto cfg = config::parse_config(text);
    const auto one = run_in(ctx, cfg, "det_" + kind + "_1", 1);
    const auto par = run_in(ctx, cfg, "det_" + kind + "_n", many);
    files += one.files.size();
    bool same = one.files.size() == par.files.size();
    for (std::size_t i = 0; same && i < one.files.size(); ++i)
      same = one.files[i].name == par.files[i].name && one.files[i].hash == par.files[i].hash;
    if (!same) differing.insert(kind);
  }
  std::string d = fmt("%zu kinds, %zu output files hashed at 1 and %u threads", small.size(), files, many);
  for (const auto& k : differing) d += ", differs: " + k;
  return {differing.empty(), d};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)(const Context&);
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddlab acceptance criteria"};
  Context ctx;
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "ddlab-acceptance").string();
  app.add_option("--threads,-j", ctx.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "criterion numbers to run");
  app.add_option("--work-dir", work, "directory for run outputs");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  fs::create_directories(ctx.work);

  const Criterion criteria[] = {
      {1, "hat-map exactness", hat_exactness},
      {2, "asymptotic period windows", period_windows},
      {3, "delayed tent map cycling", fig1},
      {4, "keener noise-induced period", fig2},
      {5, "deterministic brownian laws", brownian},
      {6, "gaussian analytic core", analytic_core},
      {7, "monte carlo variance", monte_carlo},
      {8, "variance equation residual", sigma2_residual},
      {9, "hayes vs root count", hayes},
      {10, "integrator validation", integrator},
      {11, "kicked OU limit", kicked_ou},
      {12, "thread determinism", determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %-28s %s  (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    for (const auto& n : o.notes) std::printf("       note: %s\n", n.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
