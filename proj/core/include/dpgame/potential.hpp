#pragma once

#include <cstdint>
#include <vector>

#include "dpgame/game.hpp"
#include "dpgame/problem.hpp"

namespace dpgame {

/// The single optimal control problem whose solutions are generalized Nash
/// equilibria of a game with separable costs:
///
///   P(x, u, k) = sum_i L^i(x^i, u^i, k),   R(x_T) = sum_i S^i(x^i_T)
///
/// with the game's dynamics and constraints passed through unchanged.
/// Expansions are closed form when every agent cost is quadratic and use
/// central finite differences (symmetrized Hessian) otherwise.
class PotentialOCP final : public ControlProblem {
 public:
  // Does not audit separability; see `assemble`.
  explicit PotentialOCP(GameSpec spec);

  const GameSpec& game() const { return spec_; }
  const JointDynamics& dynamics() const { return dynamics_; }
  bool analytic_expansions() const { return all_quadratic_; }

  int state_dim() const override { return dynamics_.state_dim(); }
  int control_dim() const override { return dynamics_.control_dim(); }
  int horizon() const override { return spec_.horizon; }
  const Vec& initial_state() const override { return spec_.initial_state; }

  Vec step(const Vec& x, const Vec& u, int k) const override;
  void dynamics_jacobians(const Vec& x, const Vec& u, int k, Mat& A,
                          Mat& B) const override;

  double running_cost(const Vec& x, const Vec& u, int k) const override;
  double terminal_cost(const Vec& x) const override;
  StageExpansion running_expansion(const Vec& x, const Vec& u,
                                   int k) const override;
  TerminalExpansion terminal_expansion(const Vec& x) const override;
  StageExpansion fd_running_expansion(const Vec& x, const Vec& u, int k) const;
  TerminalExpansion fd_terminal_expansion(const Vec& x) const;

  const std::vector<ConstraintKind>& stage_row_kinds() const override {
    return stage_kinds_;
  }
  const std::vector<ConstraintKind>& terminal_row_kinds() const override {
    return terminal_kinds_;
  }
  Vec stage_constraints(const Vec& x, const Vec& u, int k) const override;
  void stage_constraint_jacobians(const Vec& x, const Vec& u, int k, Mat& jx,
                                  Mat& ju) const override;
  Vec terminal_constraints(const Vec& x) const override;
  void terminal_constraint_jacobian(const Vec& x, Mat& jx) const override;

  void annotate(Trajectory& traj) const override;

 private:
  int absolute(int k) const { return spec_.start_step + k; }

  GameSpec spec_;
  JointDynamics dynamics_;
  std::vector<ConstraintKind> stage_kinds_;
  std::vector<ConstraintKind> terminal_kinds_;
  bool all_quadratic_ = false;
};

/// Validates the spec, audits separability and builds the potential OCP.
/// Throws InputError for an invalid spec and StructureError naming the
/// offending agent/block when some cost reads another agent's block.
PotentialOCP assemble(const GameSpec& spec, int audit_samples = 16,
                      std::uint64_t seed = 0);

inline constexpr double kPotentialConditionTolerance = 1e-9;

struct ConditionTrial {
  int agent = 0;
  double delta_agent = 0.0;      // J^i(gamma) - J^i(nu^i, gamma^-i)
  double delta_potential = 0.0;  // J(gamma) - J(nu^i, gamma^-i)
  double residual = 0.0;         // |difference| / (1 + |delta_potential|)
};

struct ConditionReport {
  bool passed = true;
  int trials = 0;
  int failures = 0;
  double max_residual = 0.0;
  std::vector<ConditionTrial> failed;  // first few failing trials
};

// One evaluation of the defining identity for agent `agent`: `gamma` is a
// joint control sequence and `nu` replaces agent `agent`'s block.
ConditionTrial potential_condition_trial(const GameSpec& spec,
                                         const PotentialOCP& ocp, int agent,
                                         const ControlSequence& gamma,
                                         const ControlSequence& nu);

// Random (agent, gamma, nu) trials with controls uniform in [-1, 1].
ConditionReport verify_potential_condition(const GameSpec& spec,
                                           const PotentialOCP& ocp, int trials,
                                           std::uint64_t seed);

}  // namespace dpgame
