#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ddlab/config.hpp"
#include "ddlab/csv.hpp"
#include "ddlab/error.hpp"
#include "ddlab/hash.hpp"
#include "ddlab/runner.hpp"

using namespace ddlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ddlab_runner_" + name);
  fs::remove_all(p);
  return p;
}

runner::RunManifest run_text(const std::string& text, const fs::path& root, unsigned threads = 1,
                             bool dry = false) {
  runner::RunOptions opt;
  opt.threads = threads;
  opt.dry_run = dry;
  opt.output_root = root.string();
  return runner::run(config::parse_config(text), opt);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallKeener =
    "kind = dde-ensemble\n[params]\nsystem = keener\nalpha = 10\na = 0.5\nb = 0.567\nm = 16\n"
    "noise_hi = 0.2\n[ensemble]\nspec = uniform\nlo = 0.65\nhi = 0.75\nn = 300\nseed = 4\n"
    "[output]\nt_start = 10\nt_end = 11\nsnapshot_step = 0.125\nbins = 20\n";

}  // namespace

TEST(Runner, MapIterateWritesHashedOutputs) {
  const auto root = scratch("map");
  const auto m = run_text("kind = map-iterate\n[params]\na = 1.3\nn_iter = 20\ncells = 256\n"
                          "detect_period = true\n[output]\nevery = 10\n",
                          root);
  ASSERT_FALSE(m.files.empty());
  for (const auto& f : m.files) {
    const auto content = slurp(fs::path(m.directory) / f.name);
    EXPECT_EQ(git_blob_hash(content), f.hash) << f.name;
  }
  const auto period = csv::read_file((fs::path(m.directory) / "period.csv").string());
  EXPECT_EQ(period.rows.at(0).at(period.column("period")), 2.0);
  EXPECT_TRUE(fs::exists(fs::path(m.directory) / "manifest.txt"));
}

TEST(Runner, ManifestEmbedsConfig) {
  const auto root = scratch("manifest");
  const auto cfg = config::parse_config("kind = map-iterate\n[params]\nn_iter = 2\ncells = 64\n");
  runner::RunOptions opt;
  opt.output_root = root.string();
  const auto m = runner::run(cfg, opt);
  const auto text = slurp(fs::path(m.directory) / "manifest.txt");
  EXPECT_EQ(runner::manifest_config(text), cfg);
  EXPECT_NE(text.find(m.config_hash), std::string::npos);
}

TEST(Runner, DryRunWritesOnlyManifest) {
  const auto root = scratch("dry");
  const auto m = run_text(kSmallKeener, root, 1, true);
  EXPECT_TRUE(m.files.empty());
  EXPECT_TRUE(m.dry_run);
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(m.directory)) entries += e.is_regular_file();
  EXPECT_EQ(entries, 1u);
}

TEST(Runner, ThreadCountDoesNotChangeOutputs) {
  const auto a = run_text(kSmallKeener, scratch("t1"), 1);
  const auto b = run_text(kSmallKeener, scratch("t3"), 3);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].name, b.files[i].name);
    EXPECT_EQ(a.files[i].hash, b.files[i].hash) << a.files[i].name;
  }
  EXPECT_EQ(a.config_hash, b.config_hash);
}

TEST(Runner, SnapshotCsvLayout) {
  const auto m = run_text(kSmallKeener, scratch("layout"));
  const auto snap = csv::read_file((fs::path(m.directory) / "snapshot_0000.csv").string());
  EXPECT_EQ(snap.header, (std::vector<std::string>{"t", "bin_left", "bin_right", "density"}));
  EXPECT_EQ(snap.rows.size(), 20u);
  const auto joint = csv::read_file((fs::path(m.directory) / "joint_0008.csv").string());
  EXPECT_EQ(joint.header.size(), 6u);
  EXPECT_EQ(joint.rows.at(0).at(0), 11.0);
}

TEST(Runner, CompareWritesAnalyticAndMonteCarlo) {
  const auto m = run_text(
      "kind = compare\n[params]\nkernel = brownian\na = 0\nb = -1\ntau = 1\nm = 64\n"
      "[ensemble]\nn = 4000\n",
      scratch("compare"));
  const auto t = csv::read_file((fs::path(m.directory) / "compare.csv").string());
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "sigma2_analytic", "sigma2_mc", "mc_stderr"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_NEAR(t.rows[2][1], 1.0 / 3.0, 1e-9);
  for (const auto& r : t.rows) EXPECT_LT(std::abs(r[1] - r[2]), 5 * r[3]);
}

TEST(Runner, GaussianAndKickedKinds) {
  const auto g = run_text("kind = gaussian\n[params]\nkernel = brownian\na = 0\nb = -1\ntau = 1\nT = 1\ndt = 0.05\n",
                          scratch("gauss"));
  const auto s = csv::read_file((fs::path(g.directory) / "sigma2.csv").string());
  EXPECT_NEAR(s.rows.back()[1], 1.0 / 3.0, 1e-9);
  const auto k = run_text("kind = kicked\n[params]\ntau_list = [0.2, 0.1]\nhorizon = 50\nmembers = 50\n",
                          scratch("kicked"));
  const auto r = csv::read_file((fs::path(k.directory) / "report.csv").string());
  EXPECT_EQ(r.header, (std::vector<std::string>{"tau", "var_v", "normality_stat", "msd_slope", "msd_r2"}));
  EXPECT_EQ(r.rows.size(), 2u);
}

TEST(Runner, BrownianKind) {
  const auto m = run_text(
      "kind = brownian\n[params]\nbeta = 10\nm = 32\nT = 120\nburn_in = 20\n[ensemble]\nn = 100\n"
      "[output]\nstride = 8\nmin_samples = 10000\nwrite_trajectories = 2\n",
      scratch("brownian"));
  for (const char* f : {"msd.csv", "velocity.csv", "summary.csv", "trajectory_0001.csv"})
    EXPECT_TRUE(fs::exists(fs::path(m.directory) / f)) << f;
}

TEST(Runner, ErrorsMapToExitCodes) {
  EXPECT_EQ(runner::exit_code_for(ConfigError({{3, "bad"}})), 2);
  EXPECT_EQ(runner::exit_code_for(DivergenceError(1.0, "inf")), 3);
  EXPECT_EQ(runner::exit_code_for(QuadratureError(1e-3, 1e-9, "slow")), 4);
  EXPECT_EQ(runner::exit_code_for(IoError("disk")), 1);
  EXPECT_EQ(runner::exit_code_for(std::runtime_error("other")), 1);
}

TEST(Runner, SetupProblemsAreConfigErrors) {
  // Inverted bounds only surface when the ensemble is built.
  EXPECT_THROW(run_text("kind = dde-ensemble\n[params]\nsystem = linear\na = -1\n[ensemble]\nlo = 1\nhi = 0\nn = 2\n"
                        "[output]\nt_start = 0\nt_end = 1\nsnapshot_step = 0.5\n",
                        scratch("bad")),
               ConfigError);
  EXPECT_THROW(run_text("kind = dde-ensemble\n[params]\nsystem = linear\na = -1\n[ensemble]\nn = 2\n"
                        "[output]\nt_start = 0\nt_end = 1\nsnapshot_step = 0.3\n",
                        scratch("bad2")),
               ConfigError);
}

TEST(Runner, DivergencePropagates) {
  EXPECT_THROW(run_text(std::string("kind = dde-ensemble\n[params]\nsystem = linear\na = 30\nb = 30\nm = 16\n"
                                    "[ensemble]\nspec = constant\nvalue = 1\nn = 4\n"
                                    "[output]\nt_start = 60\nt_end = 60\nsnapshot_step = 1\n"),
                        scratch("diverge")),
               DivergenceError);
}
