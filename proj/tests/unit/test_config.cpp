#include <gtest/gtest.h>

#include <string>

#include "ddlab/config.hpp"
#include "ddlab/error.hpp"

using namespace ddlab;
using namespace ddlab::config;

namespace {

std::vector<ConfigIssue> issues_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<ConfigIssue>& issues, int line, const std::string& word) {
  for (const auto& i : issues)
    if (i.line == line && i.message.find(word) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, MinimalMapIterate) {
  const auto c = parse_config("kind = map-iterate\n[params]\na = 1.8\nn_iter = 10\n");
  EXPECT_EQ(c.kind, "map-iterate");
  EXPECT_DOUBLE_EQ(c.get_real("params", "a"), 1.8);
  EXPECT_EQ(c.get_int("params", "n_iter"), 10);
  EXPECT_EQ(c.get_int("params", "cells"), 4096);  // default filled in
  EXPECT_EQ(c.get_string("params", "map"), "hat");
  EXPECT_EQ(c.threads(), 1u);
}

TEST(Config, IntegerLiteralAcceptedForReal) {
  const auto c = parse_config("kind = map-iterate\n[params]\na = 2\nn_iter = 1\n");
  EXPECT_DOUBLE_EQ(c.get_real("params", "a"), 2.0);
}

TEST(Config, TypeMismatchReportsLine) {
  const auto issues = issues_of("kind = map-iterate\n\n[params]\na = \"two\"\nn_iter = 10\n");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].line, 4);
}

TEST(Config, CollectsEveryProblem) {
  const auto issues = issues_of(
      "kind = map-iterate\n"
      "[params]\n"
      "a = yes\n"
      "colour = 3\n"
      "[weird]\n"
      "x = 1\n");
  EXPECT_GE(issues.size(), 4u);
  EXPECT_TRUE(mentions(issues, 3, "a"));
  EXPECT_TRUE(mentions(issues, 4, "colour"));
  EXPECT_TRUE(mentions(issues, 5, "weird"));
  EXPECT_TRUE(mentions(issues, 0, "n_iter"));
}

TEST(Config, RejectsUnknownKindAndChoices) {
  EXPECT_FALSE(issues_of("kind = nope\n").empty());
  EXPECT_FALSE(issues_of("").empty());
  EXPECT_TRUE(mentions(issues_of("kind = map-iterate\n[params]\nmap = logistic\nn_iter = 1\n"), 3, "map"));
  EXPECT_FALSE(issues_of("kind = map-iterate\n[params]\nn_iter = -1\n").empty());
}

TEST(Config, RejectsMalformedLines) {
  EXPECT_TRUE(mentions(issues_of("kind = map-iterate\n[params\nn_iter = 1\n"), 2, ""));
  EXPECT_TRUE(mentions(issues_of("kind = map-iterate\njust words\n"), 2, ""));
  EXPECT_TRUE(mentions(issues_of("kind = map-iterate\n[params]\nn_iter = 1\nn_iter = 2\n"), 4, "n_iter"));
}

TEST(Config, ListsAndComments) {
  const auto c = parse_config(
      "# comment\nkind = kicked   # trailing\n[params]\ntau_list = [0.4, 0.2,0.1]\n");
  EXPECT_EQ(c.get_list("params", "tau_list"), (std::vector<double>{0.4, 0.2, 0.1}));
}

TEST(Config, Fig1aRecipe) {
  const auto c = parse_config_file(std::string(DDLAB_RECIPE_DIR) + "/fig1a.ini");
  EXPECT_EQ(c.kind, "dde-ensemble");
  EXPECT_EQ(c.get_string("params", "system"), "hat");
  EXPECT_DOUBLE_EQ(c.get_real("params", "alpha"), 13.0);
  EXPECT_DOUBLE_EQ(c.get_real("params", "a"), 10.0);
  EXPECT_EQ(c.get_int("ensemble", "n"), 22500);
  EXPECT_EQ(c.get_string("ensemble", "spec"), "uniform");
  EXPECT_DOUBLE_EQ(c.get_real("ensemble", "lo"), 0.65);
  EXPECT_DOUBLE_EQ(c.get_real("ensemble", "hi"), 0.75);
}

TEST(Config, EveryRecipeParses) {
  for (const char* name : {"fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig2d", "fig3",
                           "compare_brownian", "gaussian_cosine", "kicked"})
    EXPECT_NO_THROW(parse_config_file(std::string(DDLAB_RECIPE_DIR) + "/" + name + ".ini")) << name;
}

TEST(Config, NormalizedTextRoundTrips) {
  const auto c = parse_config_file(std::string(DDLAB_RECIPE_DIR) + "/fig1b.ini");
  const auto text = normalize(c);
  const auto again = parse_config(text);
  EXPECT_EQ(again, c);
  EXPECT_EQ(normalize(again), text);
  EXPECT_EQ(config_hash(again), config_hash(c));
}

TEST(Config, HashTracksContentNotLayout) {
  const auto a = parse_config("kind = map-iterate\n[params]\nn_iter = 5\na = 1.5\n");
  const auto b = parse_config("# same thing\nkind = map-iterate\n\n[params]\na = 1.50\nn_iter = 5\n");
  const auto c = parse_config("kind = map-iterate\n[params]\nn_iter = 6\na = 1.5\n");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 40u);
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(parse_config_file("/nonexistent/ddlab.ini"), IoError);
}
