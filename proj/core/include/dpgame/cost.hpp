#pragma once

#include <functional>
#include <optional>

#include "dpgame/types.hpp"

namespace dpgame {

/// Second-order expansion of a running cost around (x, u).
struct StageExpansion {
  Vec lx, lu;
  Mat lxx, luu, lux;  // lux is m x n

  static StageExpansion zero(int n, int m);
  StageExpansion& operator+=(const StageExpansion& other);
};

/// Second-order expansion of a terminal cost around x.
struct TerminalExpansion {
  Vec lx;
  Mat lxx;

  static TerminalExpansion zero(int n);
};

/// 0.5 (x - goal)' Q (x - goal) + 0.5 u' C u per step and
/// 0.5 (x_T - goal)' Qf (x_T - goal) at the end, on one agent's blocks.
struct QuadraticCostParams {
  int state_offset = 0;
  int control_offset = 0;
  Mat Q;
  Mat C;
  Mat Qf;
  Vec goal;

  int state_dim() const { return static_cast<int>(Q.rows()); }
  int control_dim() const { return static_cast<int>(C.rows()); }
};

/// One agent's objective. Evaluators receive the *joint* state and control
/// so that a cost reading other agents' blocks can be detected by
/// `audit_separability`. Quadratic costs carry their parameters and get
/// closed-form expansions.
class AgentCost {
 public:
  using RunningFn = std::function<double(const Vec& x, const Vec& u, int k)>;
  using TerminalFn = std::function<double(const Vec& x)>;

  AgentCost() = default;

  static AgentCost quadratic(QuadraticCostParams params);
  static AgentCost custom(RunningFn running, TerminalFn terminal);

  double running(const Vec& x, const Vec& u, int k) const;
  double terminal(const Vec& x) const;

  bool is_quadratic() const { return quad_.has_value(); }
  const std::optional<QuadraticCostParams>& quadratic_params() const {
    return quad_;
  }
  bool defined() const { return static_cast<bool>(running_); }

  // Closed-form expansion added into joint-sized buffers. Quadratic only.
  void add_running_expansion(const Vec& x, const Vec& u,
                             StageExpansion& out) const;
  void add_terminal_expansion(const Vec& x, TerminalExpansion& out) const;

 private:
  RunningFn running_;
  TerminalFn terminal_;
  std::optional<QuadraticCostParams> quad_;
};

// Finite-difference expansion of an arbitrary running / terminal cost, with
// the Hessian symmetrized.
StageExpansion fd_stage_expansion(
    const std::function<double(const Vec&, const Vec&)>& cost, const Vec& x,
    const Vec& u);
TerminalExpansion fd_terminal_expansion(
    const std::function<double(const Vec&)>& cost, const Vec& x);

}  // namespace dpgame
