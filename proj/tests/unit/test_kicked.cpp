#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ddlab/error.hpp"
#include "ddlab/kicked.hpp"
#include "support.hpp"

using namespace ddlab;
using namespace ddlab::kicked;

namespace {

double tent(double x) { return x < 0.5 ? 2 * x : 2 * (1 - x); }

}  // namespace

TEST(Kicked, NoObservableMeansPureDecay) {
  KickConfig cfg;
  cfg.h = [](double) { return 0.0; };
  const auto tr = evolve_kicked(cfg, 0.0, 0.8, 0.3, 50);
  for (std::size_t j = 0; j <= 50; ++j)
    EXPECT_NEAR(tr.v[j], 0.8 * std::exp(-cfg.gamma * cfg.tau * j), 1e-15);
}

TEST(Kicked, StrongDampingForgetsThePast) {
  KickConfig cfg;
  cfg.gamma = 200.0;
  const auto tr = evolve_kicked(cfg, 0.0, 1.0, 0.3141, 20);
  for (std::size_t j = 1; j <= 20; ++j)
    EXPECT_NEAR(tr.v[j], cfg.kappa_value() * (tr.xi[j - 1] - 0.5), 1e-8);
}

TEST(Kicked, HandComputedThreeKicks) {
  KickConfig cfg;
  cfg.tau = 0.1;
  const auto tr = evolve_kicked(cfg, 0.0, 0.0, 0.2, 3);
  EXPECT_NEAR(tr.xi[1], 0.4, 1e-15);
  EXPECT_NEAR(tr.xi[2], 0.8, 1e-15);
  EXPECT_NEAR(tr.xi[3], 0.4, 1e-15);
  const double k = std::sqrt(0.1), d = std::exp(-0.1), g = 1 - d;
  const double v1 = k * (0.2 - 0.5);
  const double v2 = v1 * d + k * (0.4 - 0.5);
  const double v3 = v2 * d + k * (0.8 - 0.5);
  EXPECT_NEAR(tr.v[1], v1, 1e-15);
  EXPECT_NEAR(tr.v[2], v2, 1e-15);
  EXPECT_NEAR(tr.v[3], v3, 1e-15);
  EXPECT_NEAR(tr.x[3], v1 * g + v2 * g, 1e-15);
}

TEST(Kicked, InterKickFlowIsExact) {
  KickConfig cfg;
  cfg.gamma = 1.7;
  const auto tr = evolve_kicked(cfg, 0.0, 0.0, 0.377, 1000);
  const double decay = std::exp(-cfg.gamma * cfg.tau);
  for (std::size_t j = 1; j <= 1000; ++j) ASSERT_EQ(tr.v_pre[j], tr.v[j - 1] * decay) << j;
}

TEST(Kicked, RejectsBadParameters) {
  KickConfig cfg;
  cfg.gamma = 0.0;
  EXPECT_THROW(evolve_kicked(cfg, 0, 0, 0.3, 1), DomainError);
  EXPECT_THROW(ChaoticStream(map::Hat{2.0}, 1.5), DomainError);
}

TEST(Stream, MatchesPlainIterationUpToTruncation) {
  // Plain iteration is exact arithmetic on xi0's 53 bits; the stream carries
  // further bits, so the two differ by the truncation error amplified 2^j.
  const double xi0 = 0.7390851332151607;
  ChaoticStream s(map::Hat{2.0}, xi0);
  EXPECT_EQ(s.current(), xi0);
  double x = xi0;
  for (int j = 1; j <= 40; ++j) {
    x = tent(x);
    ASSERT_NEAR(s.next(), x, std::ldexp(1.0, j - 52)) << j;
  }
}

TEST(Stream, OneStepConsistentAndEquidistributed) {
  ChaoticStream s(map::Hat{2.0}, 0.2, 9);
  std::vector<double> xs;
  double prev = s.current();
  for (int j = 0; j < 100000; ++j) {
    const double x = s.next();
    if (j < 2000) ASSERT_NEAR(x, tent(prev), 4 * 0x1.0p-52) << j;
    xs.push_back(x);
    prev = x;
  }
  // Plain double iteration collapses to 0 after ~55 steps; the stream must not.
  EXPECT_LT(oracle::ks_uniform(xs), 1.628 / std::sqrt(100000.0));
}

TEST(Stream, OtherMapsIterateInFloatingPoint) {
  ChaoticStream s(map::Keener{0.5, 0.567}, 0.3);
  EXPECT_DOUBLE_EQ(s.next(), std::fmod(0.5 * 0.3 + 0.567, 1.0));
}

TEST(FpDecay, CenteredIdentityVanishesInOneStep) {
  const auto norms = fp_decay_check(map::Hat{2.0}, [](double x) { return x - 0.5; }, 3);
  EXPECT_NEAR(norms[0], 0.25, 1e-12);
  EXPECT_LT(norms[1], 1e-12);
}

TEST(FpDecay, ConstantsArePreserved) {
  const auto norms = fp_decay_check(map::Hat{2.0}, [](double) { return 0.3; }, 10);
  for (double v : norms) EXPECT_NEAR(v, 0.3, 1e-12);
  // The uncentered identity keeps norm 1/2 forever: no decay.
  const auto id = fp_decay_check(map::Hat{2.0}, [](double x) { return x; }, 10);
  EXPECT_NEAR(id.back(), 0.5, 1e-12);
}

TEST(FpDecay, CenteredIndicatorDecays) {
  std::vector<double> v(4096, -0.5);
  std::fill(v.begin(), v.begin() + 2048, 0.5);
  const auto norms = fp_decay_check(map::Hat{2.0}, map::GridFunction(0, 1, v), 20);
  EXPECT_LT(norms.back(), 1e-6);
}

TEST(OuSuite, ConvergesAcrossKickSpacings) {
  OuSuiteOptions opt;
  opt.members = 300;
  opt.threads = 4;
  const auto rep = ou_limit_suite(opt);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_TRUE(rep.variance_cauchy) << rep.max_relative_step;
  EXPECT_GT(rep.rows.back().msd_r2, 0.95);
  for (const auto& r : rep.rows) EXPECT_GT(r.var_v, 0.0);
}

TEST(OuSuite, VarianceScalesInverselyWithDamping) {
  OuSuiteOptions opt;
  opt.members = 300;
  opt.tau_list = {0.05};
  const double v1 = ou_limit_suite(opt).rows[0].var_v;
  opt.gamma = 2.0;
  const double v2 = ou_limit_suite(opt).rows[0].var_v;
  EXPECT_GE(v2 / v1, 0.4);
  EXPECT_LE(v2 / v1, 0.6);
}

TEST(OuSuite, StationaryMeanIsZero) {
  KickConfig cfg;
  cfg.tau = 0.05;
  double sum = 0.0, sum2 = 0.0;
  const std::size_t n = 2000;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi0 = std::fmod(0.5 + (i + 1) * 0.6180339887498949, 1.0);
    const auto tr = evolve_kicked(cfg, 0, 0, xi0, 400, i);
    sum += tr.v.back();
    sum2 += tr.v.back() * tr.v.back();
  }
  const double mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 3 * sd / std::sqrt(double(n)));
}
