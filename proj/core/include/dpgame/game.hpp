#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpgame/constraints.hpp"
#include "dpgame/cost.hpp"
#include "dpgame/dynamics.hpp"
#include "dpgame/types.hpp"

namespace dpgame {

struct Agent {
  std::string name;
  AgentModelPtr model;
  AgentCost cost;
};

/// Full description of an open-loop trajectory game.
///
/// Joint vectors use a fixed block layout: agent i occupies
/// [sum_{j<i} n_j, sum_{j<=i} n_j) in the state and likewise in the control.
/// Evaluators are called with absolute step indices `start_step + k`, which
/// lets receding-horizon replans see time-varying constraints consistently.
struct GameSpec {
  std::vector<Agent> agents;
  double step_size = 0.1;
  int horizon = 1;
  ConstraintSet constraints;
  Vec initial_state;
  int start_step = 0;

  int num_agents() const { return static_cast<int>(agents.size()); }
  std::vector<AgentModelPtr> models() const;
  BlockLayout layout() const;
  JointDynamics dynamics() const;

  GameSpec with_initial_state(Vec x0, int first_step) const;
};

struct ValidationIssue {
  enum class Kind { DimensionMismatch, NonFinite, MissingCost, InvalidParameter };
  Kind kind;
  std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

// Empty iff the spec is well formed.
ValidationReport validate_spec(const GameSpec& spec);
std::string to_string(const ValidationReport& report);

struct Trajectory {
  StateSequence states;      // T + 1 entries
  ControlSequence controls;  // T entries
  std::vector<double> step_violation;  // T + 1 entries, last is terminal
  std::vector<double> agent_costs;
  double potential_value = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
  double max_violation() const;
};

// Fills step violations, per-agent costs and the potential value for the
// states/controls already stored in `traj`.
void evaluate_trajectory(const GameSpec& spec, Trajectory& traj);

// Throws InputError on size mismatch and DivergenceError (naming the step)
// when a non-finite state appears.
Trajectory rollout(const GameSpec& spec, const Vec& x0,
                   const ControlSequence& controls);

double agent_cost(const GameSpec& spec, int agent, const StateSequence& states,
                  const ControlSequence& controls);

// max over steps and rows of max(g, 0) in the paired-inequality view.
double max_violation(const GameSpec& spec, const Trajectory& traj);

ControlSequence zero_controls(const GameSpec& spec);

struct SeparabilityOffense {
  int agent = 0;  // whose cost
  int other = 0;  // whose block it reacts to
  bool terminal = false;
  bool control = false;
  double magnitude = 0.0;
};

struct SeparabilityReport {
  bool passed = true;
  int samples = 0;
  double max_cross_sensitivity = 0.0;
  std::vector<SeparabilityOffense> offenses;  // one per (agent, other, kind)
};

inline constexpr double kSeparabilityTolerance = 1e-7;

// Finite-difference sensitivities of each agent's running and terminal cost
// to every other agent's state/control block at random points.
SeparabilityReport audit_separability(const GameSpec& spec, int samples,
                                      std::uint64_t seed);

}  // namespace dpgame
