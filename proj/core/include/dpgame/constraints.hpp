#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "dpgame/dynamics.hpp"
#include "dpgame/types.hpp"

namespace dpgame {

// Smoothing inside every norm-based evaluator: ||v|| -> sqrt(||v||^2 + eps^2).
inline constexpr double kDistanceSmoothing = 1e-9;

enum class ConstraintKind { Inequality, Equality };
enum class ScopeKind { PerAgent, Pairwise, Joint };

struct ConstraintScope {
  ScopeKind kind = ScopeKind::Joint;
  std::vector<int> agents;

  // Joint constraints involve every agent.
  bool involves(int agent) const;
};

/// A block of constraint rows g(x, u, k) <= 0 (or == 0 for equalities) on
/// the joint state and control. Terminal instances are evaluated with an
/// empty control vector and the terminal step index.
class Constraint {
 public:
  virtual ~Constraint() = default;

  virtual std::string type() const = 0;
  virtual ConstraintKind kind() const { return ConstraintKind::Inequality; }
  virtual ConstraintScope scope() const = 0;
  virtual int rows() const = 0;
  virtual bool uses_control() const = 0;

  // Smallest joint state / control size this constraint can index into.
  virtual int required_state_dim() const = 0;
  virtual int required_control_dim() const = 0;

  virtual void evaluate(const Vec& x, const Vec& u, int k,
                        Eigen::Ref<Vec> out) const = 0;

  virtual bool has_analytic_jacobian() const { return false; }
  // Writes into zero-initialized blocks (rows x n, rows x m).
  virtual void analytic_jacobian(const Vec& x, const Vec& u, int k,
                                 Eigen::Ref<Mat> jx, Eigen::Ref<Mat> ju) const;

  void jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                Eigen::Ref<Mat> ju) const;
  void fd_jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                   Eigen::Ref<Mat> ju) const;

  Vec evaluate(const Vec& x, const Vec& u, int k) const;
};

using ConstraintPtr = std::shared_ptr<const Constraint>;

/// Ordered stage and terminal constraint lists. Row layout is the
/// concatenation in declaration order.
struct ConstraintSet {
  std::vector<ConstraintPtr> stage;
  std::vector<ConstraintPtr> terminal;

  int stage_rows() const;
  int terminal_rows() const;
  std::vector<ConstraintKind> stage_row_kinds() const;
  std::vector<ConstraintKind> terminal_row_kinds() const;

  // Rows in the paired-inequality view (an equality contributes e and -e).
  int stage_inequality_rows() const;
  int terminal_inequality_rows() const;

  Vec evaluate_stage(const Vec& x, const Vec& u, int k) const;
  void stage_jacobian(const Vec& x, const Vec& u, int k, Mat& jx,
                      Mat& ju) const;
  Vec evaluate_terminal(const Vec& x, int k) const;
  void terminal_jacobian(const Vec& x, int k, Mat& jx) const;
};

// Paired-inequality expansion of native rows.
Vec to_inequality_view(const Vec& values,
                       const std::vector<ConstraintKind>& kinds);

// max over rows of max(g, 0) for inequalities and |e| for equalities.
double violation(const Vec& values, const std::vector<ConstraintKind>& kinds);

/// -||p_i - p_j|| + d_collision <= 0 on the shared position subspace.
class PairwiseCollision final : public Constraint {
 public:
  using Constraint::evaluate;
  PairwiseCollision(int agent_i, int agent_j, std::vector<int> position_i,
                    std::vector<int> position_j, double d_collision);

  std::string type() const override { return "pairwise_collision"; }
  ConstraintScope scope() const override;
  int rows() const override { return 1; }
  bool uses_control() const override { return false; }
  int required_state_dim() const override;
  int required_control_dim() const override { return 0; }
  void evaluate(const Vec& x, const Vec& u, int k,
                Eigen::Ref<Vec> out) const override;
  bool has_analytic_jacobian() const override { return true; }
  void analytic_jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                         Eigen::Ref<Mat> ju) const override;

  double d_collision() const { return d_collision_; }

 private:
  int agent_i_, agent_j_;
  std::vector<int> pos_i_, pos_j_;
  double d_collision_;
};

/// |u_e| - b_e <= 0 expanded as (u_e - b_e, -u_e - b_e) per entry.
class ControlBound final : public Constraint {
 public:
  using Constraint::evaluate;
  ControlBound(int agent, std::vector<int> control_indices, Vec bounds);

  std::string type() const override { return "control_bound"; }
  ConstraintScope scope() const override;
  int rows() const override { return 2 * static_cast<int>(idx_.size()); }
  bool uses_control() const override { return true; }
  int required_state_dim() const override { return 0; }
  int required_control_dim() const override;
  void evaluate(const Vec& x, const Vec& u, int k,
                Eigen::Ref<Vec> out) const override;
  bool has_analytic_jacobian() const override { return true; }
  void analytic_jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                         Eigen::Ref<Mat> ju) const override;

 private:
  int agent_;
  std::vector<int> idx_;
  Vec bounds_;
};

/// ||u_sel|| - v_max <= 0, e.g. the quadrotor linear-speed limit.
class SpeedBound final : public Constraint {
 public:
  using Constraint::evaluate;
  SpeedBound(int agent, std::vector<int> control_indices, double max_speed);

  std::string type() const override { return "speed_bound"; }
  ConstraintScope scope() const override;
  int rows() const override { return 1; }
  bool uses_control() const override { return true; }
  int required_state_dim() const override { return 0; }
  int required_control_dim() const override;
  void evaluate(const Vec& x, const Vec& u, int k,
                Eigen::Ref<Vec> out) const override;
  bool has_analytic_jacobian() const override { return true; }
  void analytic_jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                         Eigen::Ref<Mat> ju) const override;

 private:
  int agent_;
  std::vector<int> idx_;
  double max_speed_;
};

/// ||p_i - p_j|| - L == 0 (rigid rod between two agents).
class RodEquality final : public Constraint {
 public:
  using Constraint::evaluate;
  RodEquality(int agent_i, int agent_j, std::vector<int> position_i,
              std::vector<int> position_j, double length);

  std::string type() const override { return "rod"; }
  ConstraintKind kind() const override { return ConstraintKind::Equality; }
  ConstraintScope scope() const override;
  int rows() const override { return 1; }
  bool uses_control() const override { return false; }
  int required_state_dim() const override;
  int required_control_dim() const override { return 0; }
  void evaluate(const Vec& x, const Vec& u, int k,
                Eigen::Ref<Vec> out) const override;
  bool has_analytic_jacobian() const override { return true; }
  void analytic_jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                         Eigen::Ref<Mat> ju) const override;

  double length() const { return length_; }

 private:
  int agent_i_, agent_j_;
  std::vector<int> pos_i_, pos_j_;
  double length_;
};

/// Piecewise-linear planar path, clamped at both ends.
struct ScriptedPath {
  struct Waypoint {
    double t, x, y;
  };
  std::vector<Waypoint> waypoints;

  Eigen::Vector2d at(double t) const;
};

/// Negative signed distance from a point to a vertical solid cylinder:
/// <= 0 iff the point is outside. `point` is (x, y, z) and `center` is the
/// cylinder's mid-height center.
double cylinder_residual(const Eigen::Vector3d& point,
                         const Eigen::Vector3d& center, double radius,
                         double half_height);

// Gradient of `cylinder_residual` with respect to the point; the gradient
// with respect to the center is its negation.
Eigen::Vector3d cylinder_residual_gradient(const Eigen::Vector3d& point,
                                           const Eigen::Vector3d& center,
                                           double radius, double half_height);

/// Keeps a 3-D point agent outside a cylinder centered on another agent's
/// (px, py, r) state entries, or on a scripted path at fixed height.
class CylinderCollision final : public Constraint {
 public:
  using Constraint::evaluate;
  // Cylinder carried by agent `human` at state indices `center`.
  CylinderCollision(int quadrotor, std::vector<int> point, int human,
                    std::vector<int> center, double radius, double height);
  // Cylinder moving along `path` (time = k * step_size) at `center_height`.
  CylinderCollision(int quadrotor, std::vector<int> point, ScriptedPath path,
                    double center_height, double step_size, double radius,
                    double height);

  std::string type() const override;
  ConstraintScope scope() const override;
  int rows() const override { return 1; }
  bool uses_control() const override { return false; }
  int required_state_dim() const override;
  int required_control_dim() const override { return 0; }
  void evaluate(const Vec& x, const Vec& u, int k,
                Eigen::Ref<Vec> out) const override;
  bool has_analytic_jacobian() const override { return true; }
  void analytic_jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                         Eigen::Ref<Mat> ju) const override;

  Eigen::Vector3d center_at(const Vec& x, int k) const;
  bool scripted() const { return human_ < 0; }

 private:
  int quad_;
  std::vector<int> point_;
  int human_ = -1;
  std::vector<int> center_;
  ScriptedPath path_;
  double center_height_ = 0.0;
  double step_size_ = 0.0;
  double radius_;
  double half_height_;
};

/// User-supplied rows; Jacobians by finite differences.
class FunctionConstraint final : public Constraint {
 public:
  using Constraint::evaluate;
  using Fn = std::function<Vec(const Vec& x, const Vec& u, int k)>;

  FunctionConstraint(std::string type, ConstraintKind kind,
                     ConstraintScope scope, int rows, bool uses_control,
                     int required_state_dim, int required_control_dim, Fn fn);

  std::string type() const override { return type_; }
  ConstraintKind kind() const override { return kind_; }
  ConstraintScope scope() const override { return scope_; }
  int rows() const override { return rows_; }
  bool uses_control() const override { return uses_control_; }
  int required_state_dim() const override { return req_n_; }
  int required_control_dim() const override { return req_m_; }
  void evaluate(const Vec& x, const Vec& u, int k,
                Eigen::Ref<Vec> out) const override;

 private:
  std::string type_;
  ConstraintKind kind_;
  ConstraintScope scope_;
  int rows_;
  bool uses_control_;
  int req_n_, req_m_;
  Fn fn_;
};

// --- Declarative descriptors (scenario-file level) -------------------------

// Empty `agents` means all agents.
struct PairwiseCollisionSpec {
  std::vector<int> agents;
  double d_collision = 0.0;
};

struct ControlBoundSpec {
  std::vector<int> agents;
  std::vector<double> bound;  // one entry per control entry
};

struct SpeedBoundSpec {
  std::vector<int> agents;
  std::vector<int> entries;  // control entries forming the velocity vector
  double max_speed = 0.0;
};

struct RodSpec {
  int first = 0;
  int second = 1;
  double length = 0.0;
};

struct CylinderSpec {
  int quadrotor = 0;
  int human = 0;
  double radius = 0.0;
  double height = 0.0;  // full height
};

struct ScriptedCylinderSpec {
  int quadrotor = 0;
  std::vector<ScriptedPath::Waypoint> waypoints;
  double center_height = 0.0;
  double radius = 0.0;
  double height = 0.0;
};

using ConstraintDescriptor =
    std::variant<PairwiseCollisionSpec, ControlBoundSpec, SpeedBoundSpec,
                 RodSpec, CylinderSpec, ScriptedCylinderSpec>;

/// Expands descriptors in declaration order (pairwise groups as i < j).
/// State-only constraints are also added to the terminal list. Throws
/// InputError on an invalid agent index or incompatible model.
ConstraintSet build_constraints(const std::vector<ConstraintDescriptor>& specs,
                                const std::vector<AgentModelPtr>& models,
                                double step_size);

}  // namespace dpgame
