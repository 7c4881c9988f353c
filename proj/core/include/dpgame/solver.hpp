#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpgame/game.hpp"
#include "dpgame/problem.hpp"

namespace dpgame {

struct SolverOptions {
  double constraint_tolerance = 1e-4;
  // Outer loop also waits for |lambda g| / (1 + lambda) to settle, so that
  // multipliers left on rows that have since become inactive are cleared.
  double complementarity_tolerance = 1e-4;
  // ...and for the last inner pass to reach max |dL/du| below this. The
  // inner loop may stop early on a stalled cost decrease; this keeps such a
  // stop from being reported as a converged solution.
  double stationarity_tolerance = 1e-4;
  double cost_tolerance = 1e-6;      // relative decrease, inner loop
  double gradient_tolerance = 1e-8;  // max |dL/du| of the augmented objective
  int max_outer_iterations = 30;
  int max_inner_iterations = 100;
  double penalty_initial = 1.0;
  double penalty_scale = 10.0;
  double penalty_max = 1e8;
  double regularization_initial = 1e-6;
  double regularization_min = 1e-9;
  double regularization_max = 1e9;
  double regularization_factor = 10.0;
  double line_search_factor = 0.5;
  double min_step = 1e-8;
  bool projection_polish = true;
  double active_set_factor = 10.0;  // active threshold = factor * tolerance
  int max_polish_steps = 10;
  double polish_tolerance = 1e-8;
  std::optional<double> time_budget_ms;

  // Throws InputError if any option is out of range.
  void validate() const;
};

// Sets one option from its name, e.g. ("penalty_scale", "5"). Throws
// InputError for unknown keys or unparsable values.
void set_option(SolverOptions& opts, const std::string& key,
                const std::string& value);

/// Augmented-Lagrangian multipliers and per-row penalties. Inequality
/// multipliers stay >= 0; equality rows carry a signed multiplier.
struct MultiplierState {
  std::vector<Vec> stage_lambda;
  std::vector<Vec> stage_penalty;
  Vec terminal_lambda;
  Vec terminal_penalty;

  static MultiplierState initial(const ControlProblem& problem,
                                 double penalty);
  bool empty() const { return stage_lambda.empty() && terminal_lambda.size() == 0; }
};

struct OuterRecord {
  double objective = 0.0;
  double violation = 0.0;
  double complementarity = 0.0;
  double stationarity = 0.0;  // max |dL/du| when the inner loop stopped
  double max_penalty = 0.0;
  int inner_iterations = 0;
};

struct SolveResult {
  Trajectory trajectory;
  MultiplierState multipliers;
  // Costates xi_0..xi_{T-1}: xi_k multiplies f(x_k, u_k) - x_{k+1}.
  std::vector<Vec> costates;
  bool converged = false;
  bool budget_exceeded = false;
  bool polished = false;
  bool polish_warning = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int regularization_increases = 0;
  double max_violation = 0.0;
  double objective = 0.0;
  double solve_ms = 0.0;
  std::vector<OuterRecord> history;
};

/// Minimizes the problem objective subject to its constraints:
/// iLQR on the augmented Lagrangian (inner), projected multiplier and
/// penalty updates (outer) until the max violation is within tolerance,
/// then an optional Gauss-Newton projection onto the active constraints.
///
/// Throws DivergenceError on a non-finite objective or an unrecoverable
/// backward pass. A run that exhausts its iteration or time budget returns
/// the least-violating iterate with `converged == false`.
SolveResult solve(const ControlProblem& problem, const SolverOptions& opts,
                  const std::optional<ControlSequence>& initial_controls = {},
                  const MultiplierState* warm_multipliers = nullptr);

// --- building blocks, exposed for testing ----------------------------------

/// Linear-quadratic model of the augmented objective along a trajectory.
struct LqData {
  std::vector<Mat> A, B;
  std::vector<StageExpansion> stage;
  TerminalExpansion terminal;
};

LqData expand(const ControlProblem& problem, const StateSequence& states,
              const ControlSequence& controls,
              const MultiplierState& multipliers);

// Augmented objective: cost + per-row penalty terms.
double augmented_objective(const ControlProblem& problem,
                           const StateSequence& states,
                           const ControlSequence& controls,
                           const MultiplierState& multipliers);

struct BackwardPassResult {
  std::vector<Vec> feedforward;  // d_k
  std::vector<Mat> gains;        // K_k
  double dv_linear = 0.0;        // sum d' Q_u
  double dv_quadratic = 0.0;     // 0.5 sum d' Q_uu d
  double max_gradient = 0.0;     // max |Q_u|
  double regularization = 0.0;   // value that succeeded
  int regularization_increases = 0;

  // Predicted decrease of the objective for step length alpha.
  double expected_decrease(double alpha) const {
    return -(alpha * dv_linear + alpha * alpha * dv_quadratic);
  }
};

// Riccati sweep with Q_uu + rho I. On a failed Cholesky factorization rho
// is multiplied by the regularization factor and the sweep restarts; past
// the maximum a DivergenceError is thrown.
BackwardPassResult backward_pass(const LqData& data, double regularization,
                                 const SolverOptions& opts);

struct ForwardPassResult {
  StateSequence states;
  ControlSequence controls;
  double cost = 0.0;
  double step = 0.0;  // accepted alpha, 0 if no step decreased the cost
};

// u_k = ubar_k + alpha d_k + K_k (x_k - xbar_k) with backtracking from
// alpha = 1; the first alpha that decreases the augmented objective wins.
ForwardPassResult forward_pass(const ControlProblem& problem,
                               const StateSequence& states,
                               const ControlSequence& controls,
                               const BackwardPassResult& bp,
                               const MultiplierState& multipliers,
                               double current_cost, const SolverOptions& opts);

// lambda <- max(0, lambda + mu g) for inequality rows, lambda + mu e for
// equality rows; mu <- min(phi mu, mu_max) on rows violating the tolerance.
MultiplierState update_multipliers(
    const MultiplierState& state, const std::vector<Vec>& stage_values,
    const Vec& terminal_values, const std::vector<ConstraintKind>& stage_kinds,
    const std::vector<ConstraintKind>& terminal_kinds,
    const SolverOptions& opts);

struct PolishResult {
  StateSequence states;
  ControlSequence controls;
  MultiplierState multipliers;  // shifted along with the step
  bool changed = false;
  bool rank_deficient = false;
  int steps = 0;
  int active_rows = 0;
  double violation_before = 0.0;
  double violation_after = 0.0;
};

/// Gauss-Newton projection of the control sequence onto the manifold of
/// active constraints (equalities, violated rows, and inequality rows with
/// positive multiplier within the active threshold). Steps are taken in the
/// metric of the cost's Gauss-Newton Hessian and the active multipliers are
/// shifted with them, so first-order stationarity survives the projection.
/// Returns the input unchanged if the violation does not improve, or if the
/// active Jacobian is rank deficient (flagged).
PolishResult projection_polish(const ControlProblem& problem,
                               const StateSequence& states,
                               const ControlSequence& controls,
                               const MultiplierState& multipliers,
                               const SolverOptions& opts);

// xi_{T-1} = dR/dx_T + G_T' delta_T,
// xi_{k-1} = dP/dx_k + A_k' xi_k + G_x,k' delta_k.
std::vector<Vec> compute_costates(const ControlProblem& problem,
                                  const StateSequence& states,
                                  const ControlSequence& controls,
                                  const MultiplierState& multipliers);

}  // namespace dpgame
