#include "ddlab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddlab/csv.hpp"
#include "ddlab/dde.hpp"
#include "ddlab/ensemble.hpp"
#include "ddlab/error.hpp"
#include "ddlab/gaussian.hpp"
#include "ddlab/hash.hpp"
#include "ddlab/kicked.hpp"
#include "ddlab/map_density.hpp"

#ifndef DDLAB_VERSION
#define DDLAB_VERSION "0.0.0"
#endif

namespace ddlab::runner {

namespace fs = std::filesystem;

namespace {

using config::RunConfig;
using Outputs = std::vector<std::pair<std::string, std::string>>;

[[noreturn]] void bad_param(const std::string& msg) { throw ConfigError({{0, msg}}); }

// Parameter checks that need more than one key; errors become config errors.
template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    bad_param(e.what());
  }
}

std::string indexed(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.%s", stem, i, ext);
  return buf;
}

template <class Fill>
std::string render(Fill&& fill) {
  std::ostringstream out;
  fill(out);
  return out.str();
}

std::size_t count(const RunConfig& c, const char* s, const char* k) { return static_cast<std::size_t>(c.get_int(s, k)); }

Outputs run_map(const RunConfig& c) {
  const auto cells = count(c, "params", "cells");
  const auto& name = c.get_string("params", "map");
  const double a = c.get_real("params", "a");
  const double b = c.get_real("params", "b");
  const map::MapSpec spec = guarded([&]() -> map::MapSpec {
    map::MapSpec s;
    if (name == "hat") {
      if (!(a > 1.0 && a <= 2.0)) bad_param("hat map iteration needs 1 < a <= 2");
      s = map::Hat{a};
    } else if (name == "keener") {
      s = map::Keener{a, b};
    } else if (name == "noisy-keener") {
      const double w = c.get_real("params", "noise_width");
      if (!(w > 0.0 && w <= 1.0)) bad_param("noise_width must lie in (0, 1]");
      const auto noise_cells = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(w * static_cast<double>(cells))));
      s = map::NoisyKeener{a, b, map::GridDensity::uniform(0.0, w, noise_cells)};
    } else {
      s = map::DensityDependentHat{c.get_real("params", "A"), c.get_real("params", "delta")};
    }
    map::validate(s);
    return s;
  });
  map::GridDensity f = guarded([&] {
    if (c.get_string("params", "initial") == "uniform") return map::GridDensity::uniform(0.0, 1.0, cells);
    return map::GridDensity::indicator(0.0, 1.0, cells, c.get_real("params", "init_lo"), c.get_real("params", "init_hi"));
  });

  Outputs out;
  const auto n_iter = count(c, "params", "n_iter");
  const auto every = count(c, "output", "every");
  const map::FpStepper step(spec, cells);
  const auto dump = [&](std::size_t k) {
    out.emplace_back(indexed("density", k, "csv"), render([&](std::ostream& o) { map::write_csv(o, f.function()); }));
  };
  if (every > 0) dump(0);
  for (std::size_t k = 1; k <= n_iter; ++k) {
    f = step(f);
    if ((every > 0 && k % every == 0) || k == n_iter) dump(k);
  }
  if (n_iter == 0 && every == 0) dump(0);
  if (c.get_bool("params", "detect_period")) {
    map::PeriodOptions po{static_cast<int>(c.get_int("params", "burn_in")), static_cast<int>(c.get_int("params", "max_period")),
                          c.get_real("params", "tol")};
    if (!(po.tol > 0.0)) bad_param("tol must be positive");
    const auto rep = map::detect_asymptotic_period(spec, map::GridDensity::uniform(0.0, 1.0, cells).normalized(), po);
    out.emplace_back("period.csv", render([&](std::ostream& o) {
                       csv::Writer w(o, {"period", "burn_in", "cycle_distance"});
                       w.row({static_cast<double>(rep.period.value_or(0)), static_cast<double>(rep.burn_in), rep.cycle_distance});
                     }));
  }
  return out;
}

dde::DdeField dde_field(const RunConfig& c) {
  const auto& system = c.get_string("params", "system");
  const double alpha = c.get_real("params", "alpha");
  const double a = c.get_real("params", "a");
  const double b = c.get_real("params", "b");
  if (system == "hat") return dde::HatDde{alpha, a};
  if (system == "linear") return dde::LinearDde{a, b};
  dde::KeenerDde k{alpha, a, b, dde::NoNoise{}, c.get_real("params", "gain")};
  const double lo = c.get_real("params", "noise_lo");
  const double hi = c.get_real("params", "noise_hi");
  if (hi < lo) bad_param("noise_hi must be >= noise_lo");
  if (hi > lo) {
    double interval = c.get_real("params", "noise_interval");
    if (interval == 0.0) interval = c.get_real("params", "tau");
    if (!(interval > 0.0)) bad_param("noise_interval must be positive");
    k.noise = dde::PiecewiseConstantUniform{lo, hi, interval};
  }
  return k;
}

std::vector<double> schedule(double start, double end, double step) {
  if (!(step > 0.0) || !(end >= start)) bad_param("snapshot schedule needs t_start <= t_end and snapshot_step > 0");
  const auto n = static_cast<std::size_t>(std::llround((end - start) / step));
  if (std::abs(start + static_cast<double>(n) * step - end) > 1e-9 * std::max(1.0, std::abs(end)))
    bad_param("t_end - t_start must be a multiple of snapshot_step");
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = start + static_cast<double>(k) * step;
  return t;
}

Outputs run_dde_ensemble(const RunConfig& c, unsigned threads) {
  const auto field = dde_field(c);
  const double tau = c.get_real("params", "tau");
  const int m = static_cast<int>(c.get_int("params", "m"));
  const auto n = count(c, "ensemble", "n");
  const auto& kind = c.get_string("ensemble", "spec");
  const ensemble::InitialEnsembleSpec spec = [&]() -> ensemble::InitialEnsembleSpec {
    if (kind == "constant") return ensemble::ConstantPath{c.get_real("ensemble", "value")};
    if (kind == "uniform") return ensemble::IidUniformPath{c.get_real("ensemble", "lo"), c.get_real("ensemble", "hi")};
    const auto& blocks = c.get_list("ensemble", "blocks");
    if (blocks.empty() || blocks.size() % 3 != 0) bad_param("mixture blocks must be triples lo, hi, count");
    ensemble::Mixture mix;
    for (std::size_t i = 0; i < blocks.size(); i += 3) {
      const double cnt = blocks[i + 2];
      if (!(cnt >= 1.0) || cnt != std::floor(cnt)) bad_param("mixture counts must be positive integers");
      mix.components.emplace_back(ensemble::IidUniformPath{blocks[i], blocks[i + 1]}, static_cast<std::size_t>(cnt));
    }
    return mix;
  }();
  const auto source = guarded([&] { return ensemble::make_source(spec, n, m, tau, c.seed()); });
  const auto times = schedule(c.get_real("output", "t_start"), c.get_real("output", "t_end"), c.get_real("output", "snapshot_step"));
  ensemble::EvolveOptions eo;
  eo.threads = threads;
  eo.bins = count(c, "output", "bins");
  eo.joint = c.get_bool("output", "joint");
  guarded([&] {
    const dde::History probe = source(0);
    for (double t : times) dde::step_index(t, probe.t_now(), probe.step());
    return 0;
  });
  const auto snaps = ensemble::evolve_ensemble(source, n, field, times, c.seed(), eo);

  Outputs out;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto& s = snaps[k];
    out.emplace_back(indexed("snapshot", k, "csv"), render([&](std::ostream& o) {
                       csv::Writer w(o, {"t", "bin_left", "bin_right", "density"});
                       for (std::size_t i = 0; i < s.marginal.bins(); ++i)
                         w.row({s.t, s.marginal.bin_left(i), s.marginal.bin_left(i + 1), s.marginal.density(i)});
                     }));
    if (s.joint) {
      out.emplace_back(indexed("joint", k, "csv"), render([&](std::ostream& o) {
                         csv::Writer w(o, {"t", "x_left", "x_right", "y_left", "y_right", "density"});
                         const auto& j = *s.joint;
                         const double bw = j.bin_width();
                         for (std::size_t ix = 0; ix < j.bins(); ++ix)
                           for (std::size_t iy = 0; iy < j.bins(); ++iy) {
                             const double xl = j.lo() + bw * static_cast<double>(ix);
                             const double yl = j.lo() + bw * static_cast<double>(iy);
                             w.row({s.t, xl, xl + bw, yl, yl + bw, j.density(ix, iy)});
                           }
                       }));
    }
  }
  const double dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  const auto period = ensemble::detect_density_period(snaps, dt, c.get_real("output", "period_tol"));
  out.emplace_back("period_profile.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"lag", "offset", "mean_l1"});
                     for (std::size_t k = 1; k < period.profile.size(); ++k)
                       w.row({static_cast<double>(k), static_cast<double>(k) * dt, period.profile[k]});
                   }));
  out.emplace_back("period.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"detected", "lag", "period"});
                     w.row({period.lag ? 1.0 : 0.0, static_cast<double>(period.lag.value_or(0)), period.period.value_or(0.0)});
                   }));
  return out;
}

gaussian::CovKernel kernel_from(const RunConfig& c) {
  const auto& k = c.get_string("params", "kernel");
  if (k == "cosine") return gaussian::Cosine{};
  if (k == "cosine-degenerate") return gaussian::CosineDegenerate{};
  if (k == "brownian") return gaussian::BrownianMinPlusTau{c.get_real("params", "tau")};
  const auto& file = c.get_string("params", "kernel_file");
  if (file.empty()) bad_param("kernel = tabulated needs kernel_file");
  return gaussian::load_tabulated_kernel(file);
}

gaussian::LinearDdeParams linear_params(const RunConfig& c) {
  gaussian::LinearDdeParams p{c.get_real("params", "a"), c.get_real("params", "b"), c.get_real("params", "tau")};
  if (!(p.tau > 0.0)) bad_param("tau must be positive");
  return p;
}

Outputs run_gaussian(const RunConfig& c) {
  const auto kernel = kernel_from(c);
  const auto p = linear_params(c);
  const double T = c.get_real("params", "T");
  const double dt = c.get_real("params", "dt");
  if (!(T >= 0.0) || !(dt > 0.0)) bad_param("gaussian run needs T >= 0 and dt > 0");
  Outputs out;
  const auto curve = gaussian::sigma2_curve(kernel, p, T, dt);
  out.emplace_back("sigma2.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"t", "sigma2", "residual"});
                     for (const auto& pt : curve) w.row({pt.t, pt.sigma2, pt.residual});
                   }));
  const auto q = count(c, "params", "slice_points");
  out.emplace_back("rt.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"t", "s1", "s2", "R"});
                     for (std::size_t i = 0; i < q; ++i)
                       for (std::size_t j = 0; j < q; ++j) {
                         const double s1 = -p.tau + p.tau * static_cast<double>(i) / static_cast<double>(q - 1);
                         const double s2 = -p.tau + p.tau * static_cast<double>(j) / static_cast<double>(q - 1);
                         w.row({T, s1, s2, gaussian::r_t(kernel, p, T, s1, s2)});
                       }
                   }));
  const auto st = gaussian::hayes_stable(p);
  out.emplace_back("stability.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"a", "b", "tau", "verdict", "kappa", "margin1", "margin2", "margin3"});
                     w.row({p.a, p.b, p.tau, static_cast<double>(st.verdict), st.kappa, st.margins[0], st.margins[1], st.margins[2]});
                   }));
  return out;
}

Outputs run_brownian(const RunConfig& c, unsigned threads) {
  const double tau = c.get_real("params", "tau");
  const int m = static_cast<int>(c.get_int("params", "m"));
  const double T = c.get_real("params", "T");
  const auto n = count(c, "ensemble", "n");
  const auto stride = count(c, "output", "stride");
  const dde::BrownianDde field{c.get_real("params", "gamma"), c.get_real("params", "beta"), c.get_real("params", "forcing")};
  const auto source = guarded([&] {
    return ensemble::make_source(ensemble::IidUniformPath{c.get_real("ensemble", "lo"), c.get_real("ensemble", "hi")}, n, m, tau,
                                 c.seed(), {2, 1});
  });
  const auto trajs = guarded([&] { return ensemble::run_trajectories(source, n, field, T, c.seed(), threads, stride); });
  const auto msd = ensemble::msd_curve(trajs, tau, 0);
  const double burn = c.get_real("params", "burn_in");
  const auto vs = ensemble::velocity_stats(trajs, burn, 1, count(c, "output", "min_samples"), count(c, "output", "bins"));

  Outputs out;
  out.emplace_back("msd.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"t", "msd"});
                     for (std::size_t i = 0; i < msd.t.size(); ++i) w.row({msd.t[i], msd.msd[i]});
                   }));
  ensemble::Histogram hist(-vs.max_abs, vs.max_abs > 0.0 ? vs.max_abs : 1.0, count(c, "output", "bins"));
  for (const auto& tr : trajs)
    for (std::size_t i = 0; i < tr.size(); ++i)
      if (tr.time(i) - tr.t0 >= burn) hist.add(tr.states[i][1]);
  out.emplace_back("velocity.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"bin_left", "bin_right", "density"});
                     for (std::size_t i = 0; i < hist.bins(); ++i) w.row({hist.bin_left(i), hist.bin_left(i + 1), hist.density(i)});
                   }));
  const double beta = field.beta, gamma = field.gamma;
  out.emplace_back("summary.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"gamma", "beta", "std", "sigma_law", "max_abs", "bound_law", "msd_slope", "msd_r2", "fit_C",
                                       "fit_r2", "samples"});
                     w.row({gamma, beta, vs.std, ensemble::brownian_sigma(beta, gamma), vs.max_abs, ensemble::brownian_bound(beta, gamma),
                            msd.tail.slope, msd.tail.r2, vs.fit_C, vs.fit_r2, static_cast<double>(vs.samples)});
                   }));
  const auto dumps = std::min(count(c, "output", "write_trajectories"), trajs.size());
  for (std::size_t i = 0; i < dumps; ++i)
    out.emplace_back(indexed("trajectory", i, "csv"), render([&](std::ostream& o) { dde::write_csv(o, trajs[i]); }));
  return out;
}

Outputs run_kicked(const RunConfig& c, unsigned threads) {
  kicked::OuSuiteOptions o;
  o.gamma = c.get_real("params", "gamma");
  o.tau_list = c.get_list("params", "tau_list");
  o.horizon = c.get_real("params", "horizon");
  o.burn_in = c.get_real("params", "burn_in");
  o.members = count(c, "params", "members");
  o.threads = threads;
  if (c.get_string("params", "observable") == "identity") o.h = [](double x) { return x; };
  const auto rep = guarded([&] { return kicked::ou_limit_suite(o); });
  const auto norms = kicked::fp_decay_check(o.map, o.h, static_cast<int>(c.get_int("params", "decay_iterations")),
                                            count(c, "params", "cells"));
  Outputs out;
  out.emplace_back("report.csv", render([&](std::ostream& s) { kicked::write_csv(s, rep); }));
  out.emplace_back("fp_decay.csv", render([&](std::ostream& s) {
                     csv::Writer w(s, {"t", "l1_norm"});
                     for (std::size_t t = 0; t < norms.size(); ++t) w.row({static_cast<double>(t), norms[t]});
                   }));
  return out;
}

Outputs run_compare(const RunConfig& c, unsigned threads) {
  const auto kernel = kernel_from(c);
  const auto p = linear_params(c);
  const int m = static_cast<int>(c.get_int("params", "m"));
  const auto n = count(c, "ensemble", "n");
  auto times = c.get_list("params", "times");
  if (times.empty()) bad_param("times must not be empty");
  std::sort(times.begin(), times.end());
  const auto source = guarded([&] { return ensemble::make_source(ensemble::GaussianHistory{kernel}, n, m, p.tau, c.seed()); });
  guarded([&] {
    for (double t : times) dde::step_index(t, 0.0, p.tau / m);
    return 0;
  });
  const auto vals = ensemble::collect_snapshot_values(source, n, dde::LinearDde{p.a, p.b}, times, c.seed(), threads);
  Outputs out;
  out.emplace_back("compare.csv", render([&](std::ostream& o) {
                     csv::Writer w(o, {"t", "sigma2_analytic", "sigma2_mc", "mc_stderr"});
                     for (std::size_t k = 0; k < times.size(); ++k) {
                       double mean = 0.0;
                       for (std::size_t i = 0; i < n; ++i) mean += vals.value(i, k);
                       mean /= static_cast<double>(n);
                       double m2 = 0.0, m4 = 0.0;
                       for (std::size_t i = 0; i < n; ++i) {
                         const double d = vals.value(i, k) - mean;
                         m2 += d * d;
                         m4 += d * d * d * d;
                       }
                       const double var = m2 / static_cast<double>(n - 1);
                       m2 /= static_cast<double>(n);
                       m4 /= static_cast<double>(n);
                       const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(n));
                       w.row({times[k], gaussian::r_t(kernel, p, times[k], 0.0, 0.0), var, se});
                     }
                   }));
  return out;
}

Outputs dispatch(const RunConfig& c, unsigned threads) {
  if (c.kind == "map-iterate") return run_map(c);
  if (c.kind == "dde-ensemble") return run_dde_ensemble(c, threads);
  if (c.kind == "gaussian") return run_gaussian(c);
  if (c.kind == "brownian") return run_brownian(c, threads);
  if (c.kind == "kicked") return run_kicked(c, threads);
  if (c.kind == "compare") return run_compare(c, threads);
  bad_param("unknown kind '" + c.kind + "'");
}

fs::path output_dir(const RunConfig& c, const RunOptions& opt, const std::string& hash) {
  const auto& dir = c.get_string("output", "dir");
  if (!dir.empty()) return dir;
  std::string root = "ddlab-out";
  if (opt.output_root) {
    root = *opt.output_root;
  } else if (const char* env = std::getenv("DDLAB_OUTPUT_ROOT"); env && *env) {
    root = env;
  }
  return fs::path(root) / (c.kind + "-" + hash.substr(0, 12));
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << content;
  if (!f) throw IoError("failed writing " + path.string());
}

constexpr const char* kConfigMarker = "[[config]]";

}  // namespace

const char* version() { return DDLAB_VERSION; }

RunManifest run(const RunConfig& cfg, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.kind = cfg.kind;
  m.normalized_config = config::normalize(cfg);
  m.config_hash = sha1_hex(m.normalized_config);
  m.seed = cfg.seed();
  m.version = version();
  m.threads = opt.threads.value_or(cfg.threads());
  if (m.threads == 0) bad_param("threads must be >= 1");
  m.dry_run = opt.dry_run;
  const fs::path dir = output_dir(cfg, opt, m.config_hash);
  m.directory = dir.string();
  Outputs outputs;
  if (!opt.dry_run) outputs = dispatch(cfg, m.threads);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : outputs) {
    write_file(dir / name, content);
    m.files.push_back({name, git_blob_hash(content)});
  }
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "manifest.txt", format_manifest(m));
  return m;
}

std::string format_manifest(const RunManifest& m) {
  std::ostringstream o;
  o << "ddlab manifest\n";
  o << "kind = " << m.kind << "\n";
  o << "version = " << m.version << "\n";
  o << "config_hash = " << m.config_hash << "\n";
  o << "seed = " << m.seed << "\n";
  o << "threads = " << m.threads << "\n";
  o << "dry_run = " << (m.dry_run ? "true" : "false") << "\n";
  o << "wall_seconds = " << csv::format(m.wall_seconds) << "\n";
  o << "directory = " << m.directory << "\n";
  for (const auto& f : m.files) o << "file " << f.hash << " " << f.name << "\n";
  o << kConfigMarker << "\n" << m.normalized_config;
  return o.str();
}

config::RunConfig manifest_config(const std::string& text) {
  const auto pos = text.find(std::string(kConfigMarker) + "\n");
  if (pos == std::string::npos) throw IoError("manifest has no embedded config");
  return config::parse_config(std::string_view(text).substr(pos + std::string(kConfigMarker).size() + 1));
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::Config: return 2;
      case ErrorKind::Divergence: return 3;
      case ErrorKind::Quadrature: return 4;
      default: return 1;
    }
  }
  return 1;
}

}  // namespace ddlab::runner
