#include "lamlab/geometry.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lamlab;

TEST(Radial, FlatVolumesSumToDiskArea) {
  const DiscreteManifold m = sample::flat_disk(5.0, 0.1);
  EXPECT_EQ(m.size(), 50);
  EXPECT_NEAR(m.total_volume(), std::numbers::pi * 25.0, 1e-10);
  EXPECT_DOUBLE_EQ(m.truncation_radius(), 5.0);
  ASSERT_EQ(m.ghosts().size(), 1u);
  EXPECT_EQ(m.ghosts()[0].node, 49);
  EXPECT_EQ(m.kind(), "radial");
}

TEST(Radial, ThreeDimensionalVolumeIsExactForCubicWarpPower) {
  RadialSpec s;
  s.dimension = 3;
  s.r_max = 2.0;
  s.h = 0.25;
  const DiscreteManifold m = build_radial(s);
  EXPECT_NEAR(m.total_volume(), 4.0 / 3.0 * std::numbers::pi * 8.0, 1e-10);
}

TEST(Radial, RejectsBadSpecs) {
  RadialSpec s;
  s.r_max = 1.0;
  s.h = 0.3;
  EXPECT_THROW(build_radial(s), InvalidArgument);  // not a multiple
  s.h = 0.5;
  EXPECT_THROW(build_radial(s), InvalidArgument);  // fewer than 8 cells
  s.h = 0.1;
  s.warp = Warp::tabulated({0.0, 1.0}, {1.0, -1.0});
  EXPECT_THROW(build_radial(s), InvalidArgument);  // warp turns negative
  EXPECT_THROW(Warp::tabulated({1.0, 0.5}, {1.0, 1.0}), InvalidArgument);
}

TEST(Manifold, RejectsNonPositiveWeightsAndDisconnectedGraphs) {
  EXPECT_THROW(DiscreteManifold({1.0, -0.5}, {{0, 1, 1.0, 1.0}}, 1, 0), InvalidArgument);
  EXPECT_THROW(DiscreteManifold({1.0, 1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1, 0), InvalidArgument);
  EXPECT_THROW(DiscreteManifold({1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1, 5), InvalidArgument);
  EXPECT_THROW(DiscreteManifold({1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1, 0, {{1, 0.0, 0.5}}),
               InvalidArgument);
}

TEST(Manifold, GraphDistancesAreShortestPaths) {
  const DiscreteManifold m({1, 1, 1, 1}, {{0, 1, 1, 1.0}, {1, 2, 1, 1.0}, {0, 2, 1, 5.0}, {2, 3, 1, 0.5}}, 1, 0);
  EXPECT_DOUBLE_EQ(m.node_distances()[2], 2.0);
  EXPECT_DOUBLE_EQ(m.node_distances()[3], 2.5);
  EXPECT_DOUBLE_EQ(m.truncation_radius(), 2.5);
  EXPECT_TRUE(m.closed());
}

TEST(Builders, KindsAndSizes) {
  EXPECT_EQ(build_circle(64, 2 * std::numbers::pi).kind(), "circle");
  EXPECT_NEAR(build_circle(64, 3.0).total_volume(), 3.0, 1e-12);
  const DiscreteManifold t = build_torus(4, 5, 0.5);
  EXPECT_EQ(t.size(), 20);
  EXPECT_EQ(t.edges().size(), 40u);
  EXPECT_EQ(build_grid(5, 5).base_point(), 12);
  const DiscreteManifold p = build_path(10, 0.5);
  EXPECT_EQ(p.ghosts().size(), 2u);
  EXPECT_EQ(build_path(10, 0.5, 1.0, false, false).ghosts().size(), 0u);
  EXPECT_EQ(build_single_node(2.0).size(), 1);
}

TEST(Regions, BallOfRadiusZeroIsTheInnermostNode) {
  const DiscreteManifold m = sample::flat_disk(2.0, 0.1);
  const Region b = make_ball(m, 0.0);
  ASSERT_EQ(b.size(), 1);
  EXPECT_EQ(b.nodes()[0], 0);
  EXPECT_EQ(b.cut_edges(), 1);
}

TEST(Regions, AnnulusExcludesBasePointAndExteriorComplementsBall) {
  const DiscreteManifold m = sample::flat_disk(2.0, 0.1);
  const Region a = make_annulus(m, 0.0, 1.0);
  EXPECT_FALSE(a.contains(0));
  EXPECT_EQ(a.size(), 9);
  const Region ball = make_ball(m, 1.0);
  const Region ext = make_exterior(m, 1.0);
  EXPECT_EQ(ball.size() + ext.size(), m.size());
  for (Index i = 0; i < m.size(); ++i) EXPECT_NE(ball.contains(i), ext.contains(i));
  EXPECT_EQ(make_whole(m).size(), m.size());
}

TEST(Regions, InvalidRequestsThrow) {
  const DiscreteManifold m = sample::flat_disk(2.0, 0.1);
  EXPECT_THROW(make_ball(m, 3.0), InvalidArgument);
  EXPECT_THROW(make_ball(m, -1.0), InvalidArgument);
  EXPECT_THROW(make_exterior(m, 2.0), InvalidArgument);  // empty
  EXPECT_THROW(make_annulus(m, 1.0, 1.01), InvalidArgument);
  const double bad[] = {1.0, 2.0, 3.0};
  EXPECT_THROW(make_region(m, RegionKind::Ball, bad), InvalidArgument);
}

TEST(Regions, BallAroundAnotherCenterUsesGraphDistance) {
  const DiscreteManifold m = build_path(20, 1.0, 1.0, false, false);
  const Region b = make_ball(m, 10, 2.0);
  EXPECT_EQ(b.size(), 5);
  EXPECT_TRUE(b.contains(8));
  EXPECT_TRUE(b.contains(12));
  EXPECT_FALSE(b.contains(13));
}

TEST(Growth, ExponentsOfModelSpaces) {
  RadialSpec s;
  s.r_max = 64.0;
  s.h = 0.1;
  EXPECT_NEAR(fit_growth_exponent(build_radial(s), 4.0, 60.0).exponent, 2.0, 0.05);
  s.warp = Warp::constant(1.0);
  EXPECT_NEAR(fit_growth_exponent(build_radial(s), 4.0, 60.0).exponent, 1.0, 0.02);
  s.dimension = 3;
  s.warp = Warp::power(1.0, 1.0);
  EXPECT_NEAR(fit_growth_exponent(build_radial(s), 4.0, 60.0).exponent, 3.0, 0.05);
}

TEST(Growth, VolumeGrowthIsMonotoneAndReachesTotal) {
  std::mt19937_64 rng(7);
  const DiscreteManifold m = sample::random_graph(rng, 30, 10, 2);
  double prev = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double v = volume_growth(m, m.truncation_radius() * k / 20.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_NEAR(prev, m.total_volume(), 1e-12);
}

TEST(Cutoffs, ShapesAndDomainChecks) {
  const DiscreteManifold m = sample::flat_disk(40.0, 0.5);
  const NodeField lin = linear_cutoff(m, 10.0);
  const auto& r = m.node_distances();
  for (Index i = 0; i < m.size(); ++i) {
    EXPECT_GE(lin[i], 0.0);
    EXPECT_LE(lin[i], 1.0);
    if (r[i] <= 10.0) {
      EXPECT_EQ(lin[i], 1.0);
    }
    if (r[i] > 20.0) {
      EXPECT_EQ(lin[i], 0.0);
    }
  }
  EXPECT_THROW(linear_cutoff(m, 25.0), InvalidArgument);
  const NodeField lg = log_cutoff(m, 36.0);
  for (Index i = 0; i < m.size(); ++i) {
    if (r[i] <= 6.0) {
      EXPECT_EQ(lg[i], 1.0);
    }
    if (r[i] > 36.0) {
      EXPECT_EQ(lg[i], 0.0);
    }
  }
  EXPECT_THROW(log_cutoff(m, 7.0), InvalidArgument);
}

TEST(Csv, NodeAndEdgeDumpsHaveOneRowPerItem) {
  const DiscreteManifold m = build_circle(5, 1.0);
  std::ostringstream nodes, edges;
  write_nodes_csv(nodes, m);
  write_edges_csv(edges, m);
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(lines(nodes.str()), 6);
  EXPECT_EQ(lines(edges.str()), 6);
}
