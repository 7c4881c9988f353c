#pragma once

#include <string>
#include <vector>

#include "dpgame/game.hpp"
#include "dpgame/potential.hpp"
#include "dpgame/solver.hpp"

namespace dpgame {

/// Raw first-order residual vectors for one agent, restricted to that
/// agent's state/control blocks.
///   state[k-1]  for k = 1..T-1:  dL/dx_k + A_k' xi_k + Gx_k' delta_k - xi_{k-1}
///   control[k]  for k = 0..T-1:  dL/du_k + B_k' xi_k + Gu_k' delta_k
///   terminal:                    dS/dx_T + G_T' delta_T - xi_{T-1}
/// Each entry also carries the largest magnitude among its terms, used
/// for scaling.
struct StationarityVectors {
  std::vector<Vec> state, control;
  Vec terminal;
  std::vector<double> state_scale, control_scale;
  double terminal_scale = 0.0;
};

// Per-agent conditions: agent i's own cost L^i, S^i with lambda^i = xi and
// mu^i = delta taken from the potential problem.
StationarityVectors agent_stationarity(const GameSpec& spec,
                                       const SolveResult& result, int agent);

// Stationarity of the potential problem (P, R), restricted to agent i's
// blocks.
StationarityVectors potential_stationarity(const GameSpec& spec,
                                           const SolveResult& result,
                                           int agent);

struct AgentCertificate {
  double state_stationarity = 0.0;
  double control_stationarity = 0.0;
  double terminal_stationarity = 0.0;
  double candidate_cost = 0.0;       // J^i at the candidate
  double best_response_cost = 0.0;   // J^i at the best response found
  double best_response_gap = 0.0;
  bool gap_evaluated = false;
  bool gap_indeterminate = false;
  std::string gap_diagnostics;
};

struct CertificateTolerances {
  double stationarity = 1e-3;  // scaled residuals
  double feasibility = 1e-3;
  double complementarity = 1e-3;
  double gap_relative = 1e-3;  // gap <= gap_relative * (1 + |J^i|)
};

struct NashCertificate {
  std::vector<AgentCertificate> agents;
  double primal_feasibility = 0.0;  // max(dynamics defect, constraint violation)
  double complementarity = 0.0;     // max |delta g| / (1 + |delta|), plus dual sign
  bool multipliers_consistent = false;
  double multiplier_mismatch = 0.0;
  bool converged = false;
  CertificateTolerances tolerances;

  double max_stationarity() const;
  // Residual checks only (gaps not consulted).
  bool kkt_passed() const;
  // Residuals and every evaluated gap within tolerance.
  bool passed() const;
};

/// Per-agent KKT residuals of a solve result. Throws Error if the result
/// carries no multipliers/costates.
NashCertificate kkt_residuals(const GameSpec& spec, const SolveResult& result,
                              const CertificateTolerances& tol = {});

/// Single-agent problem: agent `agent` re-optimizes against the others'
/// frozen candidate states and controls, subject to every constraint whose
/// scope involves it.
class BestResponseProblem final : public ControlProblem {
 public:
  BestResponseProblem(const GameSpec& spec, const Trajectory& candidate,
                      int agent);

  int state_dim() const override { return n_; }
  int control_dim() const override { return m_; }
  int horizon() const override { return spec_.horizon; }
  const Vec& initial_state() const override { return x0_; }

  Vec step(const Vec& x, const Vec& u, int k) const override;
  void dynamics_jacobians(const Vec& x, const Vec& u, int k, Mat& A,
                          Mat& B) const override;
  double running_cost(const Vec& x, const Vec& u, int k) const override;
  double terminal_cost(const Vec& x) const override;
  StageExpansion running_expansion(const Vec& x, const Vec& u,
                                   int k) const override;
  TerminalExpansion terminal_expansion(const Vec& x) const override;

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

  // Joint vectors with the agent's block replaced.
  Vec joint_state(const Vec& x, int k) const;
  Vec joint_control(const Vec& u, int k) const;

  // Candidate multipliers mapped onto this problem's rows.
  MultiplierState restrict_multipliers(const MultiplierState& full) const;
  ControlSequence candidate_controls() const;

 private:
  GameSpec spec_;
  StateSequence frozen_x_;
  ControlSequence frozen_u_;
  int agent_;
  int n_, m_, xo_, uo_;
  Vec x0_;
  AgentModelPtr model_;
  std::vector<ConstraintPtr> stage_, terminal_;
  std::vector<int> stage_rows_, terminal_rows_;  // rows in the full set
  std::vector<ConstraintKind> stage_kinds_, terminal_kinds_;
};

/// J^i(candidate) - J^i(best response). On divergence or an infeasible
/// best response the gap is flagged indeterminate with diagnostics.
AgentCertificate best_response_gap(const GameSpec& spec,
                                   const SolveResult& result, int agent,
                                   const SolverOptions& opts);

/// KKT residuals plus every agent's best-response gap.
NashCertificate certify(const GameSpec& spec, const SolveResult& result,
                        const SolverOptions& opts,
                        const CertificateTolerances& tol = {});

struct BruteForceProfile {
  ControlSequence controls;  // joint
  std::vector<double> costs;
  double potential = 0.0;
};

struct BruteForceResult {
  long long profiles = 0;
  long long feasible = 0;
  std::vector<BruteForceProfile> equilibria;
  bool has_feasible = false;
  BruteForceProfile potential_argmin;  // feasible profile minimizing the potential
  bool argmin_is_equilibrium = false;
};

inline constexpr long long kBruteForceMaxProfiles = 10'000'000;

/// Exhaustive equilibrium search on a control grid: N <= 2 agents, T <= 3,
/// scalar controls, `grids[i]` holding agent i's candidate values (<= 15)
/// used at every step. A profile is kept if it is feasible and no feasible
/// unilateral grid deviation strictly lowers the deviating agent's cost.
BruteForceResult brute_force_nash(const GameSpec& spec,
                                  const std::vector<std::vector<double>>& grids);

}  // namespace dpgame
