#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"

using namespace dpgame;
using dpgame::testing::integrator_game;
using dpgame::testing::quadratic_agent;
using dpgame::testing::shipped_game;

namespace {

// Two stationary unicycles at the given positions with d_collision 0.3 and
// |u| <= 3.
GameSpec two_unicycles(Eigen::Vector2d p0, Eigen::Vector2d p1) {
  GameSpec spec;
  spec.horizon = 2;
  spec.initial_state = Vec::Zero(6);
  spec.initial_state.head(2) = p0;
  spec.initial_state.segment(3, 2) = p1;
  const auto uni = make_model("unicycle");
  spec.agents.push_back(quadratic_agent("a", uni, 0, 0, Vec::Zero(3), 1, 1, 1));
  spec.agents.push_back(quadratic_agent("b", uni, 3, 2, Vec::Zero(3), 1, 1, 1));
  spec.constraints = build_constraints(
      {PairwiseCollisionSpec{{}, 0.3}, ControlBoundSpec{{}, {3.0, 3.0}}}, spec.models(), 0.1);
  return spec;
}

}  // namespace

TEST(ValidateSpec, FourAgentExchangeIsWellFormed) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  EXPECT_EQ(spec.num_agents(), 4);
  EXPECT_EQ(spec.layout().n, 12);
  EXPECT_EQ(spec.layout().m, 8);
  EXPECT_TRUE(validate_spec(spec).empty());
}

TEST(ValidateSpec, InitialStateLengthMismatch) {
  GameSpec spec = shipped_game("four_agent_exchange.json");
  spec.initial_state = Vec::Zero(11);
  const auto report = validate_spec(spec);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].kind, ValidationIssue::Kind::DimensionMismatch);
}

TEST(ValidateSpec, SingleAgentIsValid) {
  EXPECT_TRUE(validate_spec(integrator_game({0.0}, {1.0}, 5)).empty());
}

TEST(ValidateSpec, ReportsEachProblem) {
  GameSpec spec = integrator_game({0.0, 1.0}, {1.0, 0.0}, 0);
  spec.step_size = -1.0;
  spec.agents[1].cost = AgentCost();
  const auto report = validate_spec(spec);
  ASSERT_EQ(report.size(), 3u);
  EXPECT_EQ(report[2].kind, ValidationIssue::Kind::MissingCost);

  spec = integrator_game({0.0}, {std::numeric_limits<double>::infinity()}, 3);
  EXPECT_EQ(validate_spec(spec).at(0).kind, ValidationIssue::Kind::NonFinite);
}

TEST(Rollout, ZeroControlsKeepUnicycleStill) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  const Trajectory t = rollout(spec, spec.initial_state, zero_controls(spec));
  ASSERT_EQ(t.states.size(), static_cast<std::size_t>(spec.horizon + 1));
  for (const auto& x : t.states) EXPECT_EQ(x, spec.initial_state);
}

TEST(Rollout, IntegratorUnderConstantInput) {
  const GameSpec spec = integrator_game({0.0}, {0.0}, 5);
  const Trajectory t = rollout(spec, spec.initial_state, ControlSequence(5, Vec::Ones(1)));
  for (int k = 0; k <= 5; ++k) EXPECT_NEAR(t.states[k][0], 0.1 * k, 1e-15);
}

TEST(Rollout, NonFiniteStateNamesTheStep) {
  const GameSpec spec = integrator_game({0.0}, {0.0}, 5);
  ControlSequence u(5, Vec::Zero(1));
  u[2][0] = std::numeric_limits<double>::max();
  u[3][0] = std::numeric_limits<double>::max();
  EXPECT_NO_THROW(rollout(spec, spec.initial_state, u));  // 0.2 max still finite
  u[2][0] = std::numeric_limits<double>::infinity();
  try {
    rollout(spec, spec.initial_state, u);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
  }
  // A finite control that overflows the state names the state's step.
  GameSpec wide = spec;
  wide.step_size = 1e300;
  u = ControlSequence(5, Vec::Zero(1));
  u[1][0] = 1e10;
  try {
    rollout(wide, wide.initial_state, u);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("state at step 2"), std::string::npos) << e.what();
  }
}

TEST(Rollout, RejectsWrongSizes) {
  const GameSpec spec = integrator_game({0.0}, {0.0}, 5);
  EXPECT_THROW(rollout(spec, spec.initial_state, ControlSequence(4, Vec::Zero(1))), InputError);
  EXPECT_THROW(rollout(spec, Vec::Zero(2), ControlSequence(5, Vec::Zero(1))), InputError);
}

TEST(Rollout, DeterministicAndAdditive) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  ControlSequence u(spec.horizon, Vec::Zero(8));
  for (int k = 0; k < spec.horizon; ++k) u[k] = Vec::LinSpaced(8, -1.0, 1.0) * std::sin(0.1 * k);
  const Trajectory a = rollout(spec, spec.initial_state, u);
  const Trajectory b = rollout(spec, spec.initial_state, u);
  for (int k = 0; k <= spec.horizon; ++k) EXPECT_EQ(a.states[k], b.states[k]);
  const JointDynamics dyn = spec.dynamics();
  for (int k = 0; k < spec.horizon; ++k) {
    EXPECT_LE((dyn.step(a.states[k], u[k], k) - a.states[k + 1]).norm(), 1e-10);
  }
  double sum = 0.0;
  for (double c : a.agent_costs) sum += c;
  EXPECT_NEAR(a.potential_value, sum, 1e-10 * (1.0 + std::abs(sum)));
}

TEST(MaxViolation, InactiveCollision) {
  const GameSpec spec = two_unicycles({0.0, 0.0}, {1.0, 0.0});
  const Trajectory t = rollout(spec, spec.initial_state, zero_controls(spec));
  EXPECT_EQ(max_violation(spec, t), 0.0);
}

TEST(MaxViolation, CoincidentAgents) {
  const GameSpec spec = two_unicycles({0.5, 0.5}, {0.5, 0.5});
  const Trajectory t = rollout(spec, spec.initial_state, zero_controls(spec));
  EXPECT_NEAR(max_violation(spec, t), 0.3, 1e-8);
}

TEST(MaxViolation, ControlAboveBound) {
  const GameSpec spec = two_unicycles({0.0, 0.0}, {5.0, 0.0});
  ControlSequence u = zero_controls(spec);
  u[1][0] = 3.5;
  const Trajectory t = rollout(spec, spec.initial_state, u);
  EXPECT_NEAR(max_violation(spec, t), 0.5, 1e-12);
  EXPECT_NEAR(t.step_violation[1], 0.5, 1e-12);
  EXPECT_EQ(t.step_violation[0], 0.0);
}

TEST(MaxViolation, TerminalRowsCount) {
  // a drives 0.1 m toward b on the last step: distance 0.35 -> 0.25.
  const GameSpec spec = two_unicycles({0.0, 0.0}, {0.35, 0.0});
  ControlSequence u = zero_controls(spec);
  u[1][0] = 1.0;
  const Trajectory t = rollout(spec, spec.initial_state, u);
  ASSERT_EQ(t.step_violation.size(), 3u);
  EXPECT_EQ(t.step_violation[0], 0.0);
  EXPECT_EQ(t.step_violation[1], 0.0);
  EXPECT_NEAR(t.step_violation[2], 0.05, 1e-12);
  EXPECT_NEAR(max_violation(spec, t), 0.05, 1e-12);
}

TEST(Separability, QuadraticCostsPass) {
  const auto report = audit_separability(shipped_game("four_agent_exchange.json"), 20, 3);
  EXPECT_TRUE(report.passed);
  EXPECT_LE(report.max_cross_sensitivity, kSeparabilityTolerance);
}

TEST(Separability, CrossTermIsCaught) {
  GameSpec spec = integrator_game({0.0, 1.0}, {1.0, 0.0}, 4);
  spec.agents[0].cost = AgentCost::custom(
      [](const Vec& x, const Vec& u, int) {
        return (x[0] - x[1]) * (x[0] - x[1]) + u[0] * u[0];
      },
      [](const Vec& x) { return x[0] * x[0]; });
  const auto report = audit_separability(spec, 8, 1);
  EXPECT_FALSE(report.passed);
  ASSERT_FALSE(report.offenses.empty());
  for (const auto& o : report.offenses) {
    EXPECT_EQ(o.agent, 0);
    EXPECT_EQ(o.other, 1);
    EXPECT_FALSE(o.terminal);
    EXPECT_FALSE(o.control);
  }
}

TEST(Separability, SingleAgentAlwaysPasses) {
  GameSpec spec = integrator_game({0.0}, {1.0}, 4);
  spec.agents[0].cost = AgentCost::custom([](const Vec& x, const Vec&, int) { return std::cos(x[0]); },
                                          [](const Vec&) { return 0.0; });
  EXPECT_TRUE(audit_separability(spec, 8, 1).passed);
}
