#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ient/chain_graph.hpp"
#include "testbeds.hpp"

using Eigen::VectorXd;
using ient::build_chain_graph;
using ient::chain_control_sets;
using ient::ChainGraph;
using ient::Region;
using testbeds::vec;

namespace {

ChainGraph scalar_graph() {
  auto sys = testbeds::scalar_unstable();
  Region region(vec(-1.1), vec(1.1), 0.05);
  auto controls = ient::quantize_controls(sys.control_box(), 5);
  return build_chain_graph(sys, region, controls, 0.25, 0.05);
}

}  // namespace

TEST(ChainGraph, ScalarUnstableHasOneRecurrentClass) {
  ChainGraph g = scalar_graph();
  EXPECT_EQ(g.succ.size(), 44u);
  auto sets = chain_control_sets(g);
  ASSERT_EQ(sets.classes.size(), 1u);
  // every cell meeting [-0.9, 0.9] belongs to it
  for (std::size_t i = 0; i < g.region.size(); ++i) {
    if (std::abs(g.region.center(i)[0]) <= 0.9) {
      EXPECT_EQ(sets.class_of[i], 0) << "cell " << i;
    }
  }
  auto [lo, hi] = ient::cells_envelope(g, sets.classes[0]);
  EXPECT_GE(lo[0], -1.1 - 1e-12);
  EXPECT_LE(hi[0], 1.1 + 1e-12);
  EXPECT_LE(lo[0], -0.9);
  EXPECT_GE(hi[0], 0.9);
}

TEST(ChainGraph, EdgesFollowTheExplicitAffineMap) {
  // dx/dt = x + w gives x(tau) = e^tau x + (e^tau - 1) w; check the
  // successor list of one cell against that closed form.
  ChainGraph g = scalar_graph();
  const double grow = std::exp(0.25);
  std::size_t cell = *g.region.locate(vec(0.5));
  double c = g.region.center(cell)[0];
  std::vector<std::uint32_t> expected;
  for (double w : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    double y = grow * c + (grow - 1.0) * w;
    for (std::size_t j = 0; j < g.region.size(); ++j)
      if (std::abs(g.region.center(j)[0] - y) < g.inflate)
        expected.push_back(static_cast<std::uint32_t>(j));
  }
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()),
                 expected.end());
  EXPECT_EQ(g.succ[cell], expected);
}

TEST(ChainGraph, QuarterTurnRotationSplitsIntoFourCycles) {
  // Quarter-turn cell permutation: the image of each center is exactly a
  // center, and the inflation radius 0.05 + 0.25 sqrt(2)/2 < 0.25 admits
  // only that center.  Every cell then sits on a 4-cycle.
  auto sys = testbeds::rotation();
  Region region(vec(-1.0, -1.0), vec(1.0, 1.0), 0.25);
  ChainGraph g = build_chain_graph(sys, region, {vec(0.0)}, 0.25, 0.05);
  auto sets = chain_control_sets(g);
  EXPECT_EQ(sets.classes.size(), 16u);
  for (const auto& cls : sets.classes) EXPECT_EQ(cls.size(), 4u);
  for (std::size_t i = 0; i < g.region.size(); ++i) {
    EXPECT_GE(sets.class_of[i], 0);
    ASSERT_EQ(g.succ[i].size(), 1u);
  }
}

TEST(ChainGraph, HittingStepsCountHopsToTarget) {
  ChainGraph g = scalar_graph();
  std::vector<std::uint32_t> target{
      static_cast<std::uint32_t>(*g.region.locate(vec(-0.025))),
      static_cast<std::uint32_t>(*g.region.locate(vec(0.025)))};
  auto steps = ient::hitting_steps(g, target);
  EXPECT_EQ(steps[target[0]], 0);
  EXPECT_EQ(steps[target[1]], 0);
  EXPECT_EQ(steps[*g.region.locate(vec(0.075))], 1);
  for (std::size_t i = 0; i < g.region.size(); ++i)
    EXPECT_GE(steps[i], 0) << "cell " << i << " cannot reach the middle";
  EXPECT_GT(steps[*g.region.locate(vec(1.075))], 1);
}

TEST(ChainGraph, UnreachableTargetIsMinusOne) {
  // Pure contraction with u = 0: nothing flows back out to the corner.
  auto sys = testbeds::stable_node();
  Region region(vec(-1.0, -1.0), vec(1.0, 1.0), 0.25);
  ChainGraph g = build_chain_graph(sys, region, {vec(0.0, 0.0)}, 0.5, 0.02);
  std::vector<std::uint32_t> corner{
      static_cast<std::uint32_t>(*g.region.locate(vec(0.875, 0.875)))};
  auto steps = ient::hitting_steps(g, corner);
  EXPECT_EQ(steps[*g.region.locate(vec(0.125, 0.125))], -1);
}

TEST(ChainGraph, RejectsBadInputs) {
  auto sys = testbeds::scalar_unstable();
  Region region(vec(-1.1), vec(1.1), 0.05);
  EXPECT_THROW(build_chain_graph(sys, region, {}, 0.25, 0.05),
               ient::ConfigError);
  EXPECT_THROW(build_chain_graph(sys, region, {vec(3.0)}, 0.25, 0.05),
               ient::ConfigError);
  EXPECT_THROW(build_chain_graph(sys, region, {vec(0.0)}, -1.0, 0.05),
               ient::ConfigError);
  Region planar(vec(-1.0, -1.0), vec(1.0, 1.0), 0.25);
  EXPECT_THROW(build_chain_graph(sys, planar, {vec(0.0)}, 0.25, 0.05),
               ient::ConfigError);
}

TEST(ChainGraph, BlowupCountsAsEscape) {
  // dx/dt = x^2 from the far cells leaves within the step budget.
  ient::SystemSpec sys(1, 1,
                       {{ient::parse_expr("x1^2", 1)},
                        {ient::parse_expr("0", 1)}},
                       {{-1.0, 1.0}});
  Region region(vec(2.0), vec(4.0), 0.5);
  ChainGraph g = build_chain_graph(sys, region, {vec(0.0)}, 0.5, 0.05);
  EXPECT_GT(g.escapes, 0u);
  auto sets = chain_control_sets(g);
  EXPECT_TRUE(sets.classes.empty());
}

TEST(ChainGraph, TarjanHandlesHandBuiltGraph) {
  // 0 <-> 1, 2 -> {0, 3}, 3 self-loop, 4 isolated.
  std::vector<std::vector<std::uint32_t>> succ{
      {1}, {0}, {0, 3}, {3}, {}};
  auto scc = ient::strongly_connected_components(succ);
  EXPECT_EQ(scc.comp[0], scc.comp[1]);
  EXPECT_NE(scc.comp[2], scc.comp[0]);
  EXPECT_NE(scc.comp[3], scc.comp[2]);
  EXPECT_EQ(scc.count, 4);
}
