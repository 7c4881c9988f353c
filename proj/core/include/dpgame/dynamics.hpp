#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpgame/types.hpp"

namespace dpgame {

/// Discrete-time model of a single agent, x+ = f(x, u, k) with step size h.
///
/// Models with a closed-form linearization override `jacobians`; the base
/// implementation falls back to central finite differences.
class AgentModel {
 public:
  virtual ~AgentModel() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  virtual Vec step(const Vec& x, const Vec& u, int k, double h) const = 0;

  virtual bool has_analytic_jacobians() const { return false; }
  virtual void jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                         Mat& B) const;

  // Finite-difference linearization, used as fallback and as the reference
  // in derivative checks.
  void fd_jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                    Mat& B) const;

  // Indices of the Cartesian position entries inside the state.
  virtual std::vector<int> position_indices() const = 0;
  virtual std::optional<int> heading_index() const { return std::nullopt; }
};

using AgentModelPtr = std::shared_ptr<const AgentModel>;

// State [p, q, theta], control [v, omega]; explicit Euler.
class UnicycleModel final : public AgentModel {
 public:
  std::string id() const override { return "unicycle"; }
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }
  Vec step(const Vec& x, const Vec& u, int k, double h) const override;
  bool has_analytic_jacobians() const override { return true; }
  void jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                 Mat& B) const override;
  std::vector<int> position_indices() const override { return {0, 1}; }
  std::optional<int> heading_index() const override { return 2; }
};

// Unicycle carrying a constant height: state [px, py, r, theta]. The height
// row is frozen (r+ = r).
class HumanUnicycleModel final : public AgentModel {
 public:
  std::string id() const override { return "human_unicycle"; }
  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }
  Vec step(const Vec& x, const Vec& u, int k, double h) const override;
  bool has_analytic_jacobians() const override { return true; }
  void jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                 Mat& B) const override;
  std::vector<int> position_indices() const override { return {0, 1, 2}; }
  std::optional<int> heading_index() const override { return 3; }
};

// x+ = x + h u in `dim` dimensions. dim = 6 is the quadrotor model
// ("integrator6": position then roll/pitch/yaw, velocity commands).
class IntegratorModel final : public AgentModel {
 public:
  explicit IntegratorModel(int dim);
  std::string id() const override;
  int state_dim() const override { return dim_; }
  int control_dim() const override { return dim_; }
  Vec step(const Vec& x, const Vec& u, int k, double h) const override;
  bool has_analytic_jacobians() const override { return true; }
  void jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                 Mat& B) const override;
  std::vector<int> position_indices() const override;
  std::optional<int> heading_index() const override;

 private:
  int dim_;
};

// Time-invariant discrete linear system x+ = A x + B u (h is ignored).
class LinearModel final : public AgentModel {
 public:
  LinearModel(Mat A, Mat B);
  std::string id() const override { return "linear"; }
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  Vec step(const Vec& x, const Vec& u, int k, double h) const override;
  bool has_analytic_jacobians() const override { return true; }
  void jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                 Mat& B) const override;
  std::vector<int> position_indices() const override;

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }

 private:
  Mat A_;
  Mat B_;
};

// Resolves scenario model identifiers: "unicycle", "human_unicycle",
// "integrator<d>" (e.g. "integrator6"). Throws InputError otherwise.
AgentModelPtr make_model(const std::string& id);

/// Block offsets of each agent inside the joint state and control vectors.
struct BlockLayout {
  std::vector<int> state_offset;
  std::vector<int> state_dim;
  std::vector<int> control_offset;
  std::vector<int> control_dim;
  int n = 0;
  int m = 0;

  int agents() const { return static_cast<int>(state_dim.size()); }
  static BlockLayout from_models(const std::vector<AgentModelPtr>& models);
};

/// Joint dynamics of N agents. The step is block-diagonal: agent i's next
/// state depends only on its own block.
class JointDynamics {
 public:
  JointDynamics() = default;
  JointDynamics(std::vector<AgentModelPtr> models, double step_size);

  const std::vector<AgentModelPtr>& models() const { return models_; }
  const BlockLayout& layout() const { return layout_; }
  double step_size() const { return h_; }
  int state_dim() const { return layout_.n; }
  int control_dim() const { return layout_.m; }

  // Throws InputError on dimension mismatch or non-finite input.
  Vec step(const Vec& x, const Vec& u, int k) const;
  void jacobians(const Vec& x, const Vec& u, int k, Mat& A, Mat& B) const;
  void fd_jacobians(const Vec& x, const Vec& u, int k, Mat& A, Mat& B) const;

 private:
  std::vector<AgentModelPtr> models_;
  BlockLayout layout_;
  double h_ = 0.0;
};

}  // namespace dpgame
