#include "lamlab/detail/toml_lite.hpp"
#include "lamlab/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

using namespace lamlab;
using lamlab::detail::parse_toml_lite;

namespace {

std::string message_of(const std::string& text) {
  try {
    scenario::parse_scenario(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("lamlab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(TomlLite, ValuesTablesAndComments) {
  const auto j = parse_toml_lite(R"(
# top comment
name = "x # not a comment"
n = 1_000
f = -2.5e-1
big = inf
yes = true
[a.b]
arr = [
  [1, 2.0],   # trailing comment
  [3, 4],
]
)");
  EXPECT_EQ(j["name"], "x # not a comment");
  EXPECT_EQ(j["n"], 1000);
  EXPECT_TRUE(j["n"].is_number_integer());
  EXPECT_DOUBLE_EQ(j["f"].get<double>(), -0.25);
  EXPECT_TRUE(std::isinf(j["big"].get<double>()));
  EXPECT_EQ(j["yes"], true);
  EXPECT_EQ(j["a"]["b"]["arr"][1][0], 3);
}

TEST(TomlLite, ErrorsCarryLineNumbers) {
  try {
    parse_toml_lite("a = 1\nb = \n");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_toml_lite("a = 1\na = 2\n"), InvalidArgument);
  EXPECT_THROW(parse_toml_lite("[t]\n[t]\n"), InvalidArgument);
  EXPECT_THROW(parse_toml_lite("a = \"open\n"), InvalidArgument);
  EXPECT_THROW(parse_toml_lite("a = [1, 2\n"), InvalidArgument);
  EXPECT_THROW(parse_toml_lite("a = 1.2.3\n"), InvalidArgument);
  EXPECT_THROW(parse_toml_lite("a = 1 b\n"), InvalidArgument);
}

TEST(Scenario, DefaultsAreResolvedAndEchoed) {
  const scenario::Scenario sc = scenario::parse_scenario(
      "task = \"lambda\"\n[manifold]\nkind = \"circle\"\nnodes = 16\n");
  EXPECT_EQ(sc.task, "lambda");
  EXPECT_EQ(sc.seed, 0u);
  EXPECT_EQ(sc.manifold->size(), 16);
  EXPECT_EQ(sc.resolved["potential"]["name"], "constant");
  EXPECT_EQ(sc.resolved["solver"]["tolerance"], 1e-8);
  EXPECT_EQ(sc.resolved["params"]["region"], "whole");
  EXPECT_EQ(sc.out_dir, "out");
}

TEST(Scenario, UnknownFieldsAndValuesAreNamed) {
  EXPECT_NE(message_of("task = \"lambda\"\n[manifold]\nkind = \"circle\"\nnodes = 8\nradius = 2\n")
                .find("'manifold.radius' unknown field"),
            std::string::npos);
  EXPECT_NE(message_of("task = \"lambda\"\ncolour = 1\n[manifold]\nkind = \"single\"\n").find("'colour'"),
            std::string::npos);
  EXPECT_NE(message_of("task = \"lambda\"\n[manifold]\nkind = \"radial\"\nr_max = 4.0\nh = 0.1\n"
                       "[manifold.warp]\nname = \"cosh\"\n")
                .find("'manifold.warp.name' unknown value 'cosh'"),
            std::string::npos);
  EXPECT_NE(message_of("task = \"fly\"\n").find("'task'"), std::string::npos);
  EXPECT_NE(message_of("task = \"lambda\"\n[manifold]\nkind = \"radial\"\nh = 0.1\n").find("'manifold.r_max' is required"),
            std::string::npos);
  EXPECT_NE(message_of("task = \"lambda\"\n[manifold]\nkind = \"single\"\n[params]\nregion = \"ball\"\n"
                       "region_params = [1.0, 2.0, 3.0]\n")
                .size(),
            0u);
}

TEST(Scenario, NegativeWeightsAreRejected) {
  EXPECT_NE(message_of("task = \"lambda\"\n[manifold]\nkind = \"graph\"\nvolumes = [1.0, -1.0]\n"
                       "edges = [[0, 1, 1.0, 1.0]]\n")
                .find("volume weight of node 1"),
            std::string::npos);
}

TEST(Scenario, OverridesReplaceSeedAndTask) {
  const auto sc = scenario::parse_scenario("task = \"lambda\"\nseed = 4\n[manifold]\nkind = \"single\"\n", 9,
                                           std::string("verify"));
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(sc.task, "verify");
  EXPECT_EQ(sc.resolved["seed"], 9);
}

TEST(Scenario, RunWritesReportAndTraces) {
  const auto dir = scratch_dir("run");
  const auto sc = scenario::parse_scenario(
      "task = \"exhaustion\"\n[manifold]\nkind = \"radial\"\nr_max = 4.0\nh = 0.05\n[params]\nradii = [1.0, 2.0]\n");
  const scenario::RunOutcome r = scenario::run_scenario(sc, dir);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.report["status"], "ok");
  for (const char* f : {"report.json", "manifold.csv", "manifold_edges.csv", "trace_exhaustion.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_EQ(r.report["results"]["trace"].size(), 3u);
}

TEST(Scenario, DeterministicAcrossRunsAndSeeds) {
  const std::string text =
      "task = \"verify\"\n[manifold]\nkind = \"torus\"\nnx = 6\nny = 6\n[potential]\nname = \"power\"\n"
      "scale = 0.3\nexponent = 1.0\n";
  auto strip = [](nlohmann::json j) {
    j.erase("wall_time_s");
    return j;
  };
  const auto a = scenario::run_scenario(scenario::parse_scenario(text, 5), scratch_dir("det_a"));
  const auto b = scenario::run_scenario(scenario::parse_scenario(text, 5), scratch_dir("det_b"));
  EXPECT_EQ(strip(a.report), strip(b.report));
  EXPECT_EQ(a.exit_code, 0);

  // A deterministic task does not depend on the seed at all.
  const std::string lam = "task = \"lambda\"\n[manifold]\nkind = \"radial\"\nr_max = 4.0\nh = 0.05\n";
  auto results = [&](std::uint64_t seed) {
    return scenario::run_scenario(scenario::parse_scenario(lam, seed), scratch_dir("seed")).report["results"];
  };
  EXPECT_EQ(results(1), results(2));
}

TEST(Scenario, SolverFailureIsExitThreeWithPartialResults) {
  const auto sc = scenario::parse_scenario(
      "task = \"mu\"\n[manifold]\nkind = \"radial\"\nr_max = 8.0\nh = 0.1\n[solver]\n"
      "descent_tolerance = 1e-12\nmax_iterations = 1\n");
  const auto r = scenario::run_scenario(sc, scratch_dir("fail"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(r.report["status"], "failed");
  EXPECT_TRUE(r.report.contains("error"));
  EXPECT_TRUE(r.report["results"].contains("best_candidate"));
}

TEST(Verify, AllPropertiesPassOnAGhostedGraph) {
  const auto m = std::make_shared<const DiscreteManifold>(
      DiscreteManifold({1.0, 0.5, 0.75, 1.25}, {{0, 1, 1.0, 1.0}, {1, 2, 0.5, 1.5}, {2, 3, 2.0, 0.7}, {3, 0, 1.0, 1.0}}, 2,
                       0, {{2, 0.4, 0.5}}));
  NodeField v(4);
  v << 0.5, -0.2, 1.0, 0.3;
  VerifyOptions o;
  o.entropy_solves = true;
  for (const PropertyCheck& p : verify_instance(assemble(m, v), o))
    EXPECT_TRUE(p.passed) << p.name << " worst " << p.worst << " " << p.detail;
}
