#include "dpgame/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "dpgame/numerics.hpp"

namespace dpgame {

void AgentModel::jacobians(const Vec& x, const Vec& u, int k, double h, Mat& A,
                           Mat& B) const {
  fd_jacobians(x, u, k, h, A, B);
}

void AgentModel::fd_jacobians(const Vec& x, const Vec& u, int k, double h,
                              Mat& A, Mat& B) const {
  A = numerics::central_jacobian(
      [&](const Vec& xp) { return step(xp, u, k, h); }, x);
  B = numerics::central_jacobian(
      [&](const Vec& up) { return step(x, up, k, h); }, u);
}

Vec UnicycleModel::step(const Vec& x, const Vec& u, int, double h) const {
  Vec next(3);
  next[0] = x[0] + h * u[0] * std::cos(x[2]);
  next[1] = x[1] + h * u[0] * std::sin(x[2]);
  next[2] = x[2] + h * u[1];
  return next;
}

void UnicycleModel::jacobians(const Vec& x, const Vec& u, int, double h, Mat& A,
                              Mat& B) const {
  const double c = std::cos(x[2]);
  const double s = std::sin(x[2]);
  A = Mat::Identity(3, 3);
  A(0, 2) = -h * u[0] * s;
  A(1, 2) = h * u[0] * c;
  B = Mat::Zero(3, 2);
  B(0, 0) = h * c;
  B(1, 0) = h * s;
  B(2, 1) = h;
}

Vec HumanUnicycleModel::step(const Vec& x, const Vec& u, int, double h) const {
  Vec next(4);
  next[0] = x[0] + h * u[0] * std::cos(x[3]);
  next[1] = x[1] + h * u[0] * std::sin(x[3]);
  next[2] = x[2];
  next[3] = x[3] + h * u[1];
  return next;
}

void HumanUnicycleModel::jacobians(const Vec& x, const Vec& u, int, double h,
                                   Mat& A, Mat& B) const {
  const double c = std::cos(x[3]);
  const double s = std::sin(x[3]);
  A = Mat::Identity(4, 4);
  A(0, 3) = -h * u[0] * s;
  A(1, 3) = h * u[0] * c;
  B = Mat::Zero(4, 2);
  B(0, 0) = h * c;
  B(1, 0) = h * s;
  B(3, 1) = h;
}

IntegratorModel::IntegratorModel(int dim) : dim_(dim) {
  if (dim < 1) throw InputError("integrator dimension must be positive");
}

std::string IntegratorModel::id() const {
  return "integrator" + std::to_string(dim_);
}

Vec IntegratorModel::step(const Vec& x, const Vec& u, int, double h) const {
  return x + h * u;
}

void IntegratorModel::jacobians(const Vec&, const Vec&, int, double h, Mat& A,
                                Mat& B) const {
  A = Mat::Identity(dim_, dim_);
  B = h * Mat::Identity(dim_, dim_);
}

std::vector<int> IntegratorModel::position_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < std::min(dim_, 3); ++i) idx.push_back(i);
  return idx;
}

std::optional<int> IntegratorModel::heading_index() const {
  if (dim_ == 6) return 5;  // yaw
  return std::nullopt;
}

LinearModel::LinearModel(Mat A, Mat B) : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() != A_.cols() || B_.rows() != A_.rows()) {
    throw InputError("linear model: A must be square and B must match rows");
  }
}

Vec LinearModel::step(const Vec& x, const Vec& u, int, double) const {
  return A_ * x + B_ * u;
}

void LinearModel::jacobians(const Vec&, const Vec&, int, double, Mat& A,
                            Mat& B) const {
  A = A_;
  B = B_;
}

std::vector<int> LinearModel::position_indices() const {
  return {0};
}

AgentModelPtr make_model(const std::string& id) {
  if (id == "unicycle") return std::make_shared<UnicycleModel>();
  if (id == "human_unicycle") return std::make_shared<HumanUnicycleModel>();
  const std::string prefix = "integrator";
  if (id.rfind(prefix, 0) == 0 && id.size() > prefix.size()) {
    const std::string digits = id.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") == std::string::npos &&
        digits.size() <= 2) {
      const int dim = std::stoi(digits);
      if (dim >= 1) return std::make_shared<IntegratorModel>(dim);
    }
  }
  throw InputError("unknown model id '" + id + "'");
}

BlockLayout BlockLayout::from_models(const std::vector<AgentModelPtr>& models) {
  BlockLayout layout;
  for (const auto& model : models) {
    layout.state_offset.push_back(layout.n);
    layout.control_offset.push_back(layout.m);
    layout.state_dim.push_back(model->state_dim());
    layout.control_dim.push_back(model->control_dim());
    layout.n += model->state_dim();
    layout.m += model->control_dim();
  }
  return layout;
}

JointDynamics::JointDynamics(std::vector<AgentModelPtr> models,
                             double step_size)
    : models_(std::move(models)),
      layout_(BlockLayout::from_models(models_)),
      h_(step_size) {}

Vec JointDynamics::step(const Vec& x, const Vec& u, int k) const {
  if (x.size() != layout_.n || u.size() != layout_.m) {
    std::ostringstream msg;
    msg << "dynamics step: expected state/control of size " << layout_.n
        << "/" << layout_.m << ", got " << x.size() << "/" << u.size();
    throw InputError(msg.str());
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw InputError("dynamics step: non-finite input at step " +
                     std::to_string(k));
  }
  Vec next(layout_.n);
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const int so = layout_.state_offset[i], sd = layout_.state_dim[i];
    const int co = layout_.control_offset[i], cd = layout_.control_dim[i];
    next.segment(so, sd) =
        models_[i]->step(x.segment(so, sd), u.segment(co, cd), k, h_);
  }
  return next;
}

void JointDynamics::jacobians(const Vec& x, const Vec& u, int k, Mat& A,
                              Mat& B) const {
  A = Mat::Zero(layout_.n, layout_.n);
  B = Mat::Zero(layout_.n, layout_.m);
  Mat Ai, Bi;
  for (std::size_t i = 0; i < models_.size(); ++i) {
    const int so = layout_.state_offset[i], sd = layout_.state_dim[i];
    const int co = layout_.control_offset[i], cd = layout_.control_dim[i];
    models_[i]->jacobians(x.segment(so, sd), u.segment(co, cd), k, h_, Ai, Bi);
    A.block(so, so, sd, sd) = Ai;
    B.block(so, co, sd, cd) = Bi;
  }
}

void JointDynamics::fd_jacobians(const Vec& x, const Vec& u, int k, Mat& A,
                                 Mat& B) const {
  A = numerics::central_jacobian(
      [&](const Vec& xp) { return step(xp, u, k); }, x);
  B = numerics::central_jacobian(
      [&](const Vec& up) { return step(x, up, k); }, u);
}

}  // namespace dpgame
