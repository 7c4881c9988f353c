#pragma once

#include <vector>

#include "dpgame/constraints.hpp"
#include "dpgame/cost.hpp"
#include "dpgame/types.hpp"

namespace dpgame {

struct Trajectory;

/// A finite-horizon constrained optimal control problem as seen by the
/// solver. Step indices passed in are local (0..T-1); implementations map
/// them to absolute time if they need to.
class ControlProblem {
 public:
  virtual ~ControlProblem() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int horizon() const = 0;
  virtual const Vec& initial_state() const = 0;

  virtual Vec step(const Vec& x, const Vec& u, int k) const = 0;
  virtual void dynamics_jacobians(const Vec& x, const Vec& u, int k, Mat& A,
                                  Mat& B) const = 0;

  virtual double running_cost(const Vec& x, const Vec& u, int k) const = 0;
  virtual double terminal_cost(const Vec& x) const = 0;
  virtual StageExpansion running_expansion(const Vec& x, const Vec& u,
                                           int k) const = 0;
  virtual TerminalExpansion terminal_expansion(const Vec& x) const = 0;

  virtual const std::vector<ConstraintKind>& stage_row_kinds() const = 0;
  virtual const std::vector<ConstraintKind>& terminal_row_kinds() const = 0;
  virtual Vec stage_constraints(const Vec& x, const Vec& u, int k) const = 0;
  virtual void stage_constraint_jacobians(const Vec& x, const Vec& u, int k,
                                          Mat& jx, Mat& ju) const = 0;
  virtual Vec terminal_constraints(const Vec& x) const = 0;
  virtual void terminal_constraint_jacobian(const Vec& x, Mat& jx) const = 0;

  // Hook for problems that know more about a trajectory (e.g. per-agent
  // costs). Called on every trajectory the solver returns.
  virtual void annotate(Trajectory&) const {}
};

// Cost of a state/control sequence under the problem's objective.
double objective(const ControlProblem& problem, const StateSequence& states,
                 const ControlSequence& controls);

// Rolls the problem's dynamics forward from its initial state. Throws
// DivergenceError naming the first non-finite step.
StateSequence simulate(const ControlProblem& problem,
                       const ControlSequence& controls);

// Max violation over all stage and terminal rows.
double max_violation(const ControlProblem& problem, const StateSequence& states,
                     const ControlSequence& controls);

}  // namespace dpgame
