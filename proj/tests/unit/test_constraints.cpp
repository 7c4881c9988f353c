#include <gtest/gtest.h>

#include <cmath>

#include "dpgame/constraints.hpp"
#include "dpgame/dynamics.hpp"

using namespace dpgame;

namespace {

std::vector<AgentModelPtr> unicycles(int n) {
  return std::vector<AgentModelPtr>(n, make_model("unicycle"));
}

std::vector<AgentModelPtr> rod_models() {
  return {make_model("integrator6"), make_model("integrator6"),
          make_model("human_unicycle"), make_model("human_unicycle")};
}

}  // namespace

TEST(BuildConstraints, AllPairsGiveSixRows) {
  const auto set = build_constraints({PairwiseCollisionSpec{{}, 0.3}}, unicycles(4), 0.1);
  EXPECT_EQ(set.stage_rows(), 6);
  EXPECT_EQ(set.terminal_rows(), 6);
}

TEST(BuildConstraints, ControlBoundGivesFourRowsPerAgent) {
  const auto set = build_constraints({ControlBoundSpec{{}, {3.0, 3.0}}}, unicycles(4), 0.1);
  EXPECT_EQ(set.stage_rows(), 16);
  EXPECT_EQ(set.terminal_rows(), 0);
}

TEST(BuildConstraints, RodCarryInventory) {
  const double r = std::sqrt(0.4);
  const auto set = build_constraints(
      {RodSpec{0, 1, 0.5}, PairwiseCollisionSpec{{2, 3}, 1.0}, CylinderSpec{0, 2, r, 2.0},
       CylinderSpec{0, 3, r, 2.0}, CylinderSpec{1, 2, r, 2.0}, CylinderSpec{1, 3, r, 2.0},
       SpeedBoundSpec{{0, 1}, {0, 1, 2}, 1.2}, ControlBoundSpec{{2, 3}, {1.5, 3.0}}},
      rod_models(), 0.1);
  std::map<std::string, int> count;
  for (const auto& c : set.stage) count[c->type()] += c->rows();
  EXPECT_EQ(count["rod"], 1);
  EXPECT_EQ(count["pairwise_collision"], 1);
  EXPECT_EQ(count["cylinder_collision"], 4);
  EXPECT_EQ(count["speed_bound"], 2);
  EXPECT_EQ(count["control_bound"], 8);
  // The rod is one native equality row, two rows in the paired view.
  EXPECT_EQ(set.stage_inequality_rows(), set.stage_rows() + 1);
}

TEST(BuildConstraints, DeclarationOrderAndPairOrder) {
  const auto set = build_constraints(
      {ControlBoundSpec{{0}, {1.0, 1.0}}, PairwiseCollisionSpec{{}, 0.3}}, unicycles(3), 0.1);
  ASSERT_EQ(set.stage.size(), 4u);
  EXPECT_EQ(set.stage[0]->type(), "control_bound");
  EXPECT_EQ(set.stage[1]->scope().agents, (std::vector<int>{0, 1}));
  EXPECT_EQ(set.stage[2]->scope().agents, (std::vector<int>{0, 2}));
  EXPECT_EQ(set.stage[3]->scope().agents, (std::vector<int>{1, 2}));
}

TEST(BuildConstraints, RejectsInvalidReferences) {
  EXPECT_THROW(build_constraints({PairwiseCollisionSpec{{0, 4}, 0.3}}, unicycles(2), 0.1),
               InputError);
  EXPECT_THROW(build_constraints({ControlBoundSpec{{0}, {1.0}}}, unicycles(1), 0.1), InputError);
  EXPECT_THROW(build_constraints({RodSpec{0, 0, 0.5}}, rod_models(), 0.1), InputError);
  EXPECT_THROW(build_constraints({CylinderSpec{0, 1, 0.6, 2.0}}, unicycles(2), 0.1), InputError);
  EXPECT_THROW(build_constraints({SpeedBoundSpec{{0}, {0, 5}, 1.0}}, unicycles(1), 0.1), InputError);
}

TEST(PairwiseCollision, BoundaryAndSymmetry) {
  const PairwiseCollision ij(0, 1, {0, 1}, {3, 4}, 0.3);
  const PairwiseCollision ji(1, 0, {3, 4}, {0, 1}, 0.3);
  Vec x = Vec::Zero(6);
  x[3] = 0.3;
  EXPECT_NEAR(ij.evaluate(x, Vec(), 0)[0], 0.0, 1e-12);
  x[3] = 0.6;
  EXPECT_NEAR(ij.evaluate(x, Vec(), 0)[0], -0.3, 1e-12);
  x << 0.4, -1.2, 0.0, 1.1, 0.3, 2.0;
  EXPECT_DOUBLE_EQ(ij.evaluate(x, Vec(), 0)[0], ji.evaluate(x, Vec(), 0)[0]);
}

TEST(PairwiseCollision, CoincidentAgentsStayFinite) {
  const PairwiseCollision c(0, 1, {0, 1}, {3, 4}, 0.3);
  const Vec x = Vec::Zero(6);
  EXPECT_NEAR(c.evaluate(x, Vec(), 0)[0], 0.3, 1e-8);
  Mat jx = Mat::Zero(1, 6), ju = Mat::Zero(1, 0);
  c.analytic_jacobian(x, Vec(), 0, jx, ju);
  EXPECT_TRUE(jx.allFinite());
}

TEST(ControlBound, SplitsAbsoluteValue) {
  const ControlBound c(0, {0, 1}, Eigen::Vector2d(3.0, 3.0));
  const Vec g = c.evaluate(Vec(), Eigen::Vector2d(3.5, -1.0), 0);
  ASSERT_EQ(g.size(), 4);
  EXPECT_DOUBLE_EQ(g.maxCoeff(), 0.5);
  EXPECT_DOUBLE_EQ(violation(g, std::vector<ConstraintKind>(4, ConstraintKind::Inequality)), 0.5);
}

TEST(SpeedBound, IsANorm) {
  const SpeedBound c(0, {0, 1, 2}, 1.2);
  Vec u = Vec::Zero(6);
  u << 0.6, 0.8, 0.0, 5.0, 5.0, 5.0;
  EXPECT_NEAR(c.evaluate(Vec(), u, 0)[0], -0.2, 1e-12);
}

TEST(Rod, EqualityResidual) {
  const RodEquality c(0, 1, {0, 1, 2}, {6, 7, 8}, 0.5);
  EXPECT_EQ(c.kind(), ConstraintKind::Equality);
  Vec x = Vec::Zero(12);
  x[6] = 0.3;
  EXPECT_NEAR(c.evaluate(x, Vec(), 0)[0], -0.2, 1e-12);
  const Vec paired = to_inequality_view(c.evaluate(x, Vec(), 0), {ConstraintKind::Equality});
  ASSERT_EQ(paired.size(), 2);
  EXPECT_NEAR(paired[0], -0.2, 1e-12);
  EXPECT_NEAR(paired[1], 0.2, 1e-12);
  EXPECT_NEAR(violation(c.evaluate(x, Vec(), 0), {ConstraintKind::Equality}), 0.2, 1e-12);
}

TEST(Cylinder, ResidualSignMatchesInside) {
  const Eigen::Vector3d center(0.0, 0.0, 1.0);
  const double r = std::sqrt(0.4), hh = 1.0;
  EXPECT_GT(cylinder_residual({0.1, 0.0, 1.0}, center, r, hh), 0.0);
  EXPECT_GT(cylinder_residual({0.0, 0.0, 1.9}, center, r, hh), 0.0);
  EXPECT_LT(cylinder_residual({1.0, 0.0, 1.0}, center, r, hh), 0.0);
  EXPECT_LT(cylinder_residual({0.0, 0.0, 2.5}, center, r, hh), 0.0);
  // Side: horizontal distance minus radius.
  EXPECT_NEAR(cylinder_residual({1.0, 0.0, 1.2}, center, r, hh), -(1.0 - r), 1e-12);
  // Above the cap: distance to the cap disc.
  EXPECT_NEAR(cylinder_residual({0.2, 0.0, 2.5}, center, r, hh), -0.5, 1e-12);
  // Beyond the rim: distance to the rim edge.
  EXPECT_NEAR(cylinder_residual({r + 0.3, 0.0, 2.4}, center, r, hh), -0.5, 1e-12);
  // On the surface.
  EXPECT_NEAR(cylinder_residual({r, 0.0, 0.5}, center, r, hh), 0.0, 1e-12);
}

TEST(Cylinder, FollowsHumanAndScript) {
  const double r = std::sqrt(0.4);
  const auto models = rod_models();
  const auto set = build_constraints(
      {CylinderSpec{0, 2, r, 2.0},
       ScriptedCylinderSpec{1, {{0.0, 0.0, 0.0}, {1.0, 2.0, 0.0}}, 1.0, r, 2.0}},
      models, 0.1);
  ASSERT_EQ(set.stage.size(), 2u);
  Vec x = Vec::Zero(20);
  x.segment(0, 3) << 0.0, 0.0, 1.0;
  x.segment(12, 4) << 0.0, 0.0, 1.0, 0.0;
  EXPECT_GT(set.stage[0]->evaluate(x, Vec::Zero(16), 0)[0], 0.0);
  x.segment(12, 4) << 2.0, 0.0, 1.0, 0.0;
  EXPECT_LT(set.stage[0]->evaluate(x, Vec::Zero(16), 0)[0], 0.0);

  // Scripted cylinder at t = 0.5 s sits at x = 1.
  x.segment(6, 3) << 1.0, 0.0, 1.0;
  EXPECT_GT(set.stage[1]->evaluate(x, Vec::Zero(16), 5)[0], 0.0);
  EXPECT_LT(set.stage[1]->evaluate(x, Vec::Zero(16), 10)[0], 0.0);
  EXPECT_EQ(set.stage[1]->scope().agents, (std::vector<int>{1}));
}

TEST(ScriptedPath, ClampsAndInterpolates) {
  const ScriptedPath p{{{1.0, 0.0, 0.0}, {3.0, 4.0, 2.0}}};
  EXPECT_TRUE(p.at(0.0).isApprox(Eigen::Vector2d(0.0, 0.0)));
  EXPECT_TRUE(p.at(2.0).isApprox(Eigen::Vector2d(2.0, 1.0)));
  EXPECT_TRUE(p.at(9.0).isApprox(Eigen::Vector2d(4.0, 2.0)));
}

TEST(ConstraintScope, JointInvolvesEveryone) {
  ConstraintScope joint;
  EXPECT_TRUE(joint.involves(7));
  ConstraintScope pair{ScopeKind::Pairwise, {1, 3}};
  EXPECT_TRUE(pair.involves(3));
  EXPECT_FALSE(pair.involves(2));
}
