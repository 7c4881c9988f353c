#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpgame/game.hpp"
#include "dpgame/solver.hpp"

namespace dpgame {

enum class WarmStart { Shift, Zero };

struct MPCConfig {
  double horizon_seconds = 0.5;
  double step_size = 0.1;
  int total_steps = 50;
  WarmStart warm_start = WarmStart::Shift;
  int replan_every = 1;
  SolverOptions solver;

  // horizon_seconds / step_size; throws InputError unless it is an integer >= 1.
  int planning_steps() const;
  void validate() const;
};

struct ReplanRecord {
  int step = 0;  // absolute step at which the plan starts
  bool converged = false;
  double objective = 0.0;
  double plan_violation = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool polished = false;
  bool polish_warning = false;
  double solve_ms = 0.0;
  ControlSequence applied;  // first `replan_every` controls of the plan
};

struct FailureRecord {
  int replan = 0;
  int step = 0;
  std::string reason;
};

struct ClosedLoopLog {
  std::vector<ReplanRecord> replans;
  StateSequence states;             // realized, states[0] = initial state
  ControlSequence controls;         // applied, controls[k] moves states[k]
  std::vector<double> step_violation;  // stage constraints at (x_k, u_k, k)
  std::optional<FailureRecord> failure;

  double min_pairwise_distance = 0.0;       // over all agent pairs and states
  std::vector<double> rod_error;            // max |rod residual| per state
  double min_cylinder_clearance = 0.0;      // min -g over cylinder rows
  std::vector<double> goal_error;           // per agent, final position
  double max_step_violation = 0.0;

  bool ok() const { return !failure.has_value(); }
};

/// Receding-horizon loop: plan over the configured horizon from the current
/// state, apply the first `replan_every` controls, advance, repeat. A solve
/// that diverges, or returns a plan violating the constraint tolerance, ends
/// the run with a failure record. In shift mode both the controls and the
/// stage multipliers of the previous plan are shifted into the next solve.
ClosedLoopLog run_mpc(const GameSpec& spec, const MPCConfig& config);

}  // namespace dpgame
