#include <gtest/gtest.h>

#include <cmath>

#include "dpgame/nash.hpp"
#include "fixtures.hpp"
#include "riccati_oracle.hpp"

using namespace dpgame;
using dpgame::testing::brute_force_instance;
using dpgame::testing::integrator_game;
using dpgame::testing::random_lq_game;
using dpgame::testing::shipped_game;

namespace {

double max_norm(const std::vector<Vec>& v) {
  double m = 0.0;
  for (const auto& e : v) m = std::max(m, e.size() ? e.lpNorm<Eigen::Infinity>() : 0.0);
  return m;
}

bool same_controls(const ControlSequence& a, const ControlSequence& b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if ((a[k] - b[k]).lpNorm<Eigen::Infinity>() > 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST(Kkt, LqSolutionHasTinyResiduals) {
  const auto game = random_lq_game(3, 2, 1, 20, 21);
  const SolveResult r = solve(assemble(game.spec), SolverOptions{});
  ASSERT_TRUE(r.converged);
  const NashCertificate c = kkt_residuals(game.spec, r);
  EXPECT_TRUE(c.kkt_passed());
  EXPECT_LE(c.max_stationarity(), 1e-8);
  EXPECT_LE(c.primal_feasibility, 1e-12);
  for (int i = 0; i < 3; ++i) {
    const auto v = agent_stationarity(game.spec, r, i);
    EXPECT_LE(max_norm(v.control), 1e-8);
    EXPECT_LE(max_norm(v.state), 1e-8);
    EXPECT_LE(v.terminal.lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(Kkt, PerturbedControlIsDetected) {
  const auto game = random_lq_game(2, 2, 1, 20, 22);
  const PotentialOCP ocp = assemble(game.spec);
  SolveResult r = solve(ocp, SolverOptions{});
  r.trajectory.controls[5][0] += 0.1;
  r.trajectory.states = simulate(ocp, r.trajectory.controls);
  r.costates = compute_costates(ocp, r.trajectory.states, r.trajectory.controls, r.multipliers);
  const NashCertificate c = kkt_residuals(game.spec, r);
  EXPECT_GT(c.agents[0].control_stationarity, 1e-3);
  EXPECT_FALSE(c.kkt_passed());
}

TEST(Kkt, AgentAndPotentialResidualsCoincide) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  const SolveResult r = solve(assemble(spec), SolverOptions{});
  for (int i = 0; i < 4; ++i) {
    const auto a = agent_stationarity(spec, r, i);
    const auto p = potential_stationarity(spec, r, i);
    ASSERT_EQ(a.control.size(), p.control.size());
    for (std::size_t k = 0; k < a.control.size(); ++k) {
      EXPECT_LE((a.control[k] - p.control[k]).norm(), 1e-12);
    }
    for (std::size_t k = 0; k < a.state.size(); ++k) {
      EXPECT_LE((a.state[k] - p.state[k]).norm(), 1e-12);
    }
    EXPECT_LE((a.terminal - p.terminal).norm(), 1e-12);
  }
}

TEST(Kkt, MissingMultipliersThrow) {
  const GameSpec spec = integrator_game({0.0}, {1.0}, 4);
  SolveResult r = solve(assemble(spec), SolverOptions{});
  r.costates.clear();
  EXPECT_THROW(kkt_residuals(spec, r), Error);
}

TEST(Certificate, FourAgentExchangePasses) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  const SolverOptions opts;
  const SolveResult r = solve(assemble(spec), opts);
  ASSERT_TRUE(r.converged);
  const NashCertificate c = certify(spec, r, opts);
  EXPECT_TRUE(c.passed());
  EXPECT_TRUE(c.multipliers_consistent);
  ASSERT_EQ(c.agents.size(), 4u);
  for (const auto& a : c.agents) {
    EXPECT_TRUE(a.gap_evaluated);
    EXPECT_FALSE(a.gap_indeterminate) << a.gap_diagnostics;
    EXPECT_LE(a.best_response_gap, 1e-3 * (1.0 + std::abs(a.candidate_cost)));
    EXPECT_LE(a.best_response_cost, a.candidate_cost + 1e-3 * (1.0 + std::abs(a.candidate_cost)));
  }
}

TEST(Certificate, SingleAgentGapIsZero) {
  const GameSpec spec = integrator_game({0.0}, {1.0}, 10);
  const SolverOptions opts;
  const SolveResult r = solve(assemble(spec), opts);
  const NashCertificate c = certify(spec, r, opts);
  ASSERT_TRUE(c.passed());
  EXPECT_NEAR(c.agents[0].best_response_gap, 0.0, 1e-9);
}

TEST(Certificate, ShortenedRunIsNotCertified) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  SolverOptions opts;
  opts.max_outer_iterations = 1;
  const SolveResult r = solve(assemble(spec), opts);
  ASSERT_FALSE(r.converged);
  EXPECT_FALSE(kkt_residuals(spec, r).passed());
}

TEST(BestResponse, ProblemRebuildsCandidate) {
  const GameSpec spec = shipped_game("four_agent_exchange.json");
  const SolveResult r = solve(assemble(spec), SolverOptions{});
  const BestResponseProblem br(spec, r.trajectory, 2);
  EXPECT_EQ(br.state_dim(), 3);
  EXPECT_EQ(br.control_dim(), 2);
  const ControlSequence u = br.candidate_controls();
  const StateSequence x = simulate(br, u);
  for (int k = 0; k <= spec.horizon; ++k) {
    EXPECT_LE((br.joint_state(x[k], k) - r.trajectory.states[k]).norm(), 1e-12);
  }
  EXPECT_NEAR(objective(br, x, u), r.trajectory.agent_costs[2], 1e-9);
  EXPECT_THROW(BestResponseProblem(spec, r.trajectory, 4), InputError);
}

TEST(BruteForce, PotentialArgminIsAnEquilibrium) {
  const auto g = brute_force_instance();
  const BruteForceResult r = brute_force_nash(g.spec, g.grids);
  EXPECT_EQ(r.profiles, 11LL * 11 * 11 * 11);
  ASSERT_TRUE(r.has_feasible);
  EXPECT_LT(r.feasible, r.profiles);
  EXPECT_TRUE(r.argmin_is_equilibrium);
  bool found = false;
  for (const auto& e : r.equilibria) found = found || same_controls(e.controls, r.potential_argmin.controls);
  EXPECT_TRUE(found);
  // Every equilibrium is feasible and its potential is at least the argmin's.
  for (const auto& e : r.equilibria) {
    EXPECT_GE(e.potential, r.potential_argmin.potential - 1e-12);
    EXPECT_EQ(max_violation(g.spec, rollout(g.spec, g.spec.initial_state, e.controls)), 0.0);
  }
}

TEST(BruteForce, UncoupledGameHasTheArgminAsOnlyEquilibrium) {
  GameSpec spec = integrator_game({-1.0, 1.0}, {0.4, -0.4}, 2, 1.0);
  const std::vector<double> grid = {-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6};
  const BruteForceResult r = brute_force_nash(spec, {grid, grid});
  ASSERT_EQ(r.equilibria.size(), 1u);
  EXPECT_TRUE(same_controls(r.equilibria[0].controls, r.potential_argmin.controls));
}

TEST(BruteForce, RefusesUnsupportedInstances) {
  const auto g = brute_force_instance();
  EXPECT_THROW(brute_force_nash(integrator_game({0, 0, 0}, {1, 1, 1}, 2, 1.0), {{0.0}, {0.0}, {0.0}}),
               InputError);
  EXPECT_THROW(brute_force_nash(integrator_game({0, 0}, {1, 1}, 4, 1.0), {{0.0}, {0.0}}),
               InputError);
  EXPECT_THROW(brute_force_nash(g.spec, {g.grids[0]}), InputError);
  EXPECT_THROW(brute_force_nash(g.spec, {std::vector<double>(16, 0.0), g.grids[1]}), InputError);
  EXPECT_THROW(brute_force_nash(shipped_game("four_agent_exchange.json"), {{0.0}, {0.0}}),
               InputError);
}
