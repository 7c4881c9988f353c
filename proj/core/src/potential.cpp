#include "dpgame/potential.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dpgame {

double objective(const ControlProblem& problem, const StateSequence& states,
                 const ControlSequence& controls) {
  double total = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    total += problem.running_cost(states[k], controls[k], static_cast<int>(k));
  }
  return total + problem.terminal_cost(states.back());
}

StateSequence simulate(const ControlProblem& problem,
                       const ControlSequence& controls) {
  StateSequence states;
  states.reserve(controls.size() + 1);
  states.push_back(problem.initial_state());
  for (std::size_t k = 0; k < controls.size(); ++k) {
    Vec next = problem.step(states.back(), controls[k], static_cast<int>(k));
    if (!next.allFinite()) {
      throw DivergenceError("non-finite state at step " + std::to_string(k + 1));
    }
    states.push_back(std::move(next));
  }
  return states;
}

double max_violation(const ControlProblem& problem, const StateSequence& states,
                     const ControlSequence& controls) {
  double worst = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    worst = std::max(
        worst, violation(problem.stage_constraints(states[k], controls[k],
                                                   static_cast<int>(k)),
                         problem.stage_row_kinds()));
  }
  return std::max(worst, violation(problem.terminal_constraints(states.back()),
                                   problem.terminal_row_kinds()));
}

PotentialOCP::PotentialOCP(GameSpec spec)
    : spec_(std::move(spec)),
      dynamics_(spec_.dynamics()),
      stage_kinds_(spec_.constraints.stage_row_kinds()),
      terminal_kinds_(spec_.constraints.terminal_row_kinds()) {
  all_quadratic_ =
      std::all_of(spec_.agents.begin(), spec_.agents.end(),
                  [](const Agent& a) { return a.cost.is_quadratic(); });
}

Vec PotentialOCP::step(const Vec& x, const Vec& u, int k) const {
  return dynamics_.step(x, u, absolute(k));
}

void PotentialOCP::dynamics_jacobians(const Vec& x, const Vec& u, int k,
                                      Mat& A, Mat& B) const {
  dynamics_.jacobians(x, u, absolute(k), A, B);
}

double PotentialOCP::running_cost(const Vec& x, const Vec& u, int k) const {
  double total = 0.0;
  for (const auto& a : spec_.agents) total += a.cost.running(x, u, absolute(k));
  return total;
}

double PotentialOCP::terminal_cost(const Vec& x) const {
  double total = 0.0;
  for (const auto& a : spec_.agents) total += a.cost.terminal(x);
  return total;
}

StageExpansion PotentialOCP::running_expansion(const Vec& x, const Vec& u,
                                               int k) const {
  if (!all_quadratic_) return fd_running_expansion(x, u, k);
  auto e = StageExpansion::zero(state_dim(), control_dim());
  for (const auto& a : spec_.agents) a.cost.add_running_expansion(x, u, e);
  return e;
}

TerminalExpansion PotentialOCP::terminal_expansion(const Vec& x) const {
  if (!all_quadratic_) return fd_terminal_expansion(x);
  auto e = TerminalExpansion::zero(state_dim());
  for (const auto& a : spec_.agents) a.cost.add_terminal_expansion(x, e);
  return e;
}

StageExpansion PotentialOCP::fd_running_expansion(const Vec& x, const Vec& u,
                                                  int k) const {
  return fd_stage_expansion(
      [&](const Vec& xx, const Vec& uu) { return running_cost(xx, uu, k); }, x,
      u);
}

TerminalExpansion PotentialOCP::fd_terminal_expansion(const Vec& x) const {
  return dpgame::fd_terminal_expansion(
      [&](const Vec& xx) { return terminal_cost(xx); }, x);
}

Vec PotentialOCP::stage_constraints(const Vec& x, const Vec& u, int k) const {
  return spec_.constraints.evaluate_stage(x, u, absolute(k));
}

void PotentialOCP::stage_constraint_jacobians(const Vec& x, const Vec& u, int k,
                                              Mat& jx, Mat& ju) const {
  spec_.constraints.stage_jacobian(x, u, absolute(k), jx, ju);
}

Vec PotentialOCP::terminal_constraints(const Vec& x) const {
  return spec_.constraints.evaluate_terminal(x, absolute(spec_.horizon));
}

void PotentialOCP::terminal_constraint_jacobian(const Vec& x, Mat& jx) const {
  spec_.constraints.terminal_jacobian(x, absolute(spec_.horizon), jx);
}

void PotentialOCP::annotate(Trajectory& traj) const {
  evaluate_trajectory(spec_, traj);
}

PotentialOCP assemble(const GameSpec& spec, int audit_samples,
                      std::uint64_t seed) {
  const auto issues = validate_spec(spec);
  if (!issues.empty()) {
    throw InputError("invalid game spec:\n" + to_string(issues));
  }
  const auto audit = audit_separability(spec, audit_samples, seed);
  if (!audit.passed) {
    const auto& o = audit.offenses.front();
    std::ostringstream msg;
    msg << "cost of agent " << o.agent << " ('" << spec.agents[o.agent].name
        << "') depends on the " << (o.control ? "control" : "state")
        << " block of agent " << o.other << " in its "
        << (o.terminal ? "terminal" : "running")
        << " cost (sensitivity " << o.magnitude
        << "); the potential reduction requires separable costs";
    throw StructureError(msg.str());
  }
  return PotentialOCP(spec);
}

ConditionTrial potential_condition_trial(const GameSpec& spec,
                                         const PotentialOCP& ocp, int agent,
                                         const ControlSequence& gamma,
                                         const ControlSequence& nu) {
  const auto layout = spec.layout();
  const int co = layout.control_offset[agent];
  const int cd = layout.control_dim[agent];
  ControlSequence deviated = gamma;
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    deviated[k].segment(co, cd) = nu[k].segment(co, cd);
  }

  const Trajectory a = rollout(spec, spec.initial_state, gamma);
  const Trajectory b = rollout(spec, spec.initial_state, deviated);

  ConditionTrial trial;
  trial.agent = agent;
  trial.delta_agent = agent_cost(spec, agent, a.states, a.controls) -
                      agent_cost(spec, agent, b.states, b.controls);
  trial.delta_potential = objective(ocp, simulate(ocp, gamma), gamma) -
                          objective(ocp, simulate(ocp, deviated), deviated);
  trial.residual = std::abs(trial.delta_agent - trial.delta_potential) /
                   (1.0 + std::abs(trial.delta_potential));
  return trial;
}

ConditionReport verify_potential_condition(const GameSpec& spec,
                                           const PotentialOCP& ocp, int trials,
                                           std::uint64_t seed) {
  const auto layout = spec.layout();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, spec.num_agents() - 1);
  auto random_controls = [&] {
    ControlSequence seq(spec.horizon, Vec(layout.m));
    for (auto& u : seq) {
      for (int r = 0; r < layout.m; ++r) u[r] = unit(rng);
    }
    return seq;
  };

  ConditionReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const int agent = pick(rng);
    const auto gamma = random_controls();
    const auto nu = random_controls();
    const auto trial = potential_condition_trial(spec, ocp, agent, gamma, nu);
    report.max_residual = std::max(report.max_residual, trial.residual);
    if (trial.residual > kPotentialConditionTolerance) {
      ++report.failures;
      if (report.failed.size() < 8) report.failed.push_back(trial);
    }
  }
  report.passed = report.failures == 0;
  return report;
}

}  // namespace dpgame
