#include "dpgame/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpgame/numerics.hpp"

namespace dpgame {

namespace {

int max_index_plus_one(const std::vector<int>& idx) {
  return idx.empty() ? 0 : *std::max_element(idx.begin(), idx.end()) + 1;
}

Vec gather(const Vec& v, const std::vector<int>& idx) {
  Vec out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

double smoothed_norm(const Vec& v) {
  return std::sqrt(v.squaredNorm() + kDistanceSmoothing * kDistanceSmoothing);
}

}  // namespace

bool ConstraintScope::involves(int agent) const {
  if (kind == ScopeKind::Joint) return true;
  return std::find(agents.begin(), agents.end(), agent) != agents.end();
}

void Constraint::analytic_jacobian(const Vec&, const Vec&, int,
                                   Eigen::Ref<Mat>, Eigen::Ref<Mat>) const {
  throw Error(type() + ": no analytic Jacobian");
}

void Constraint::jacobian(const Vec& x, const Vec& u, int k, Eigen::Ref<Mat> jx,
                          Eigen::Ref<Mat> ju) const {
  if (has_analytic_jacobian()) {
    jx.setZero();
    ju.setZero();
    analytic_jacobian(x, u, k, jx, ju);
  } else {
    fd_jacobian(x, u, k, jx, ju);
  }
}

void Constraint::fd_jacobian(const Vec& x, const Vec& u, int k,
                             Eigen::Ref<Mat> jx, Eigen::Ref<Mat> ju) const {
  jx = numerics::central_jacobian(
      [&](const Vec& xp) { return evaluate(xp, u, k); }, x);
  if (u.size() > 0) {
    ju = numerics::central_jacobian(
        [&](const Vec& up) { return evaluate(x, up, k); }, u);
  }
}

Vec Constraint::evaluate(const Vec& x, const Vec& u, int k) const {
  Vec out(rows());
  evaluate(x, u, k, out);
  return out;
}

// --- ConstraintSet -----------------------------------------------------------

namespace {

int count_rows(const std::vector<ConstraintPtr>& list) {
  int rows = 0;
  for (const auto& c : list) rows += c->rows();
  return rows;
}

int count_inequality_rows(const std::vector<ConstraintPtr>& list) {
  int rows = 0;
  for (const auto& c : list) {
    rows += c->kind() == ConstraintKind::Equality ? 2 * c->rows() : c->rows();
  }
  return rows;
}

std::vector<ConstraintKind> row_kinds(const std::vector<ConstraintPtr>& list) {
  std::vector<ConstraintKind> kinds;
  for (const auto& c : list) kinds.insert(kinds.end(), c->rows(), c->kind());
  return kinds;
}

}  // namespace

int ConstraintSet::stage_rows() const { return count_rows(stage); }
int ConstraintSet::terminal_rows() const { return count_rows(terminal); }
int ConstraintSet::stage_inequality_rows() const {
  return count_inequality_rows(stage);
}
int ConstraintSet::terminal_inequality_rows() const {
  return count_inequality_rows(terminal);
}
std::vector<ConstraintKind> ConstraintSet::stage_row_kinds() const {
  return row_kinds(stage);
}
std::vector<ConstraintKind> ConstraintSet::terminal_row_kinds() const {
  return row_kinds(terminal);
}

Vec ConstraintSet::evaluate_stage(const Vec& x, const Vec& u, int k) const {
  Vec out(stage_rows());
  int row = 0;
  for (const auto& c : stage) {
    c->evaluate(x, u, k, out.segment(row, c->rows()));
    row += c->rows();
  }
  return out;
}

void ConstraintSet::stage_jacobian(const Vec& x, const Vec& u, int k, Mat& jx,
                                   Mat& ju) const {
  const int rows = stage_rows();
  jx = Mat::Zero(rows, x.size());
  ju = Mat::Zero(rows, u.size());
  int row = 0;
  for (const auto& c : stage) {
    c->jacobian(x, u, k, jx.middleRows(row, c->rows()),
                ju.middleRows(row, c->rows()));
    row += c->rows();
  }
}

Vec ConstraintSet::evaluate_terminal(const Vec& x, int k) const {
  Vec out(terminal_rows());
  const Vec none;
  int row = 0;
  for (const auto& c : terminal) {
    c->evaluate(x, none, k, out.segment(row, c->rows()));
    row += c->rows();
  }
  return out;
}

void ConstraintSet::terminal_jacobian(const Vec& x, int k, Mat& jx) const {
  const int rows = terminal_rows();
  jx = Mat::Zero(rows, x.size());
  Mat ju = Mat::Zero(rows, 0);
  const Vec none;
  int row = 0;
  for (const auto& c : terminal) {
    c->jacobian(x, none, k, jx.middleRows(row, c->rows()),
                ju.middleRows(row, c->rows()));
    row += c->rows();
  }
}

Vec to_inequality_view(const Vec& values,
                       const std::vector<ConstraintKind>& kinds) {
  std::vector<double> rows;
  for (Eigen::Index r = 0; r < values.size(); ++r) {
    rows.push_back(values[r]);
    if (kinds[r] == ConstraintKind::Equality) rows.push_back(-values[r]);
  }
  return Eigen::Map<Vec>(rows.data(), static_cast<Eigen::Index>(rows.size()));
}

double violation(const Vec& values, const std::vector<ConstraintKind>& kinds) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < values.size(); ++r) {
    const double v = kinds[r] == ConstraintKind::Equality
                         ? std::abs(values[r])
                         : std::max(values[r], 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

// --- PairwiseCollision -------------------------------------------------------

PairwiseCollision::PairwiseCollision(int agent_i, int agent_j,
                                     std::vector<int> position_i,
                                     std::vector<int> position_j,
                                     double d_collision)
    : agent_i_(agent_i),
      agent_j_(agent_j),
      pos_i_(std::move(position_i)),
      pos_j_(std::move(position_j)),
      d_collision_(d_collision) {
  if (pos_i_.size() != pos_j_.size() || pos_i_.empty()) {
    throw InputError("pairwise_collision: position subspaces must match");
  }
}

ConstraintScope PairwiseCollision::scope() const {
  return {ScopeKind::Pairwise, {agent_i_, agent_j_}};
}

int PairwiseCollision::required_state_dim() const {
  return std::max(max_index_plus_one(pos_i_), max_index_plus_one(pos_j_));
}

void PairwiseCollision::evaluate(const Vec& x, const Vec&, int,
                                 Eigen::Ref<Vec> out) const {
  out[0] = -smoothed_norm(gather(x, pos_i_) - gather(x, pos_j_)) + d_collision_;
}

void PairwiseCollision::analytic_jacobian(const Vec& x, const Vec&, int,
                                          Eigen::Ref<Mat> jx,
                                          Eigen::Ref<Mat>) const {
  const Vec diff = gather(x, pos_i_) - gather(x, pos_j_);
  const double dist = smoothed_norm(diff);
  for (std::size_t a = 0; a < pos_i_.size(); ++a) {
    jx(0, pos_i_[a]) -= diff[a] / dist;
    jx(0, pos_j_[a]) += diff[a] / dist;
  }
}

// --- ControlBound ------------------------------------------------------------

ControlBound::ControlBound(int agent, std::vector<int> control_indices,
                           Vec bounds)
    : agent_(agent), idx_(std::move(control_indices)), bounds_(std::move(bounds)) {
  if (static_cast<Eigen::Index>(idx_.size()) != bounds_.size()) {
    throw InputError("control_bound: one bound per control entry required");
  }
}

ConstraintScope ControlBound::scope() const {
  return {ScopeKind::PerAgent, {agent_}};
}

int ControlBound::required_control_dim() const {
  return max_index_plus_one(idx_);
}

void ControlBound::evaluate(const Vec&, const Vec& u, int,
                            Eigen::Ref<Vec> out) const {
  for (std::size_t e = 0; e < idx_.size(); ++e) {
    out[2 * e] = u[idx_[e]] - bounds_[e];
    out[2 * e + 1] = -u[idx_[e]] - bounds_[e];
  }
}

void ControlBound::analytic_jacobian(const Vec&, const Vec&, int,
                                     Eigen::Ref<Mat>, Eigen::Ref<Mat> ju) const {
  for (std::size_t e = 0; e < idx_.size(); ++e) {
    ju(2 * e, idx_[e]) = 1.0;
    ju(2 * e + 1, idx_[e]) = -1.0;
  }
}

// --- SpeedBound --------------------------------------------------------------

SpeedBound::SpeedBound(int agent, std::vector<int> control_indices,
                       double max_speed)
    : agent_(agent), idx_(std::move(control_indices)), max_speed_(max_speed) {
  if (idx_.empty()) throw InputError("speed_bound: no control entries");
}

ConstraintScope SpeedBound::scope() const {
  return {ScopeKind::PerAgent, {agent_}};
}

int SpeedBound::required_control_dim() const {
  return max_index_plus_one(idx_);
}

void SpeedBound::evaluate(const Vec&, const Vec& u, int,
                          Eigen::Ref<Vec> out) const {
  out[0] = smoothed_norm(gather(u, idx_)) - max_speed_;
}

void SpeedBound::analytic_jacobian(const Vec&, const Vec& u, int,
                                   Eigen::Ref<Mat>, Eigen::Ref<Mat> ju) const {
  const Vec v = gather(u, idx_);
  const double norm = smoothed_norm(v);
  for (std::size_t e = 0; e < idx_.size(); ++e) ju(0, idx_[e]) = v[e] / norm;
}

// --- RodEquality -------------------------------------------------------------

RodEquality::RodEquality(int agent_i, int agent_j, std::vector<int> position_i,
                         std::vector<int> position_j, double length)
    : agent_i_(agent_i),
      agent_j_(agent_j),
      pos_i_(std::move(position_i)),
      pos_j_(std::move(position_j)),
      length_(length) {
  if (pos_i_.size() != pos_j_.size() || pos_i_.empty()) {
    throw InputError("rod: position subspaces must match");
  }
}

ConstraintScope RodEquality::scope() const {
  return {ScopeKind::Pairwise, {agent_i_, agent_j_}};
}

int RodEquality::required_state_dim() const {
  return std::max(max_index_plus_one(pos_i_), max_index_plus_one(pos_j_));
}

void RodEquality::evaluate(const Vec& x, const Vec&, int,
                           Eigen::Ref<Vec> out) const {
  out[0] = smoothed_norm(gather(x, pos_i_) - gather(x, pos_j_)) - length_;
}

void RodEquality::analytic_jacobian(const Vec& x, const Vec&, int,
                                    Eigen::Ref<Mat> jx, Eigen::Ref<Mat>) const {
  const Vec diff = gather(x, pos_i_) - gather(x, pos_j_);
  const double dist = smoothed_norm(diff);
  for (std::size_t a = 0; a < pos_i_.size(); ++a) {
    jx(0, pos_i_[a]) += diff[a] / dist;
    jx(0, pos_j_[a]) -= diff[a] / dist;
  }
}

// --- Cylinder geometry -------------------------------------------------------

Eigen::Vector2d ScriptedPath::at(double t) const {
  if (waypoints.empty()) return Eigen::Vector2d::Zero();
  if (t <= waypoints.front().t) {
    return {waypoints.front().x, waypoints.front().y};
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const auto& a = waypoints[i - 1];
    const auto& b = waypoints[i];
    if (t <= b.t) {
      const double s = b.t > a.t ? (t - a.t) / (b.t - a.t) : 1.0;
      return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
    }
  }
  return {waypoints.back().x, waypoints.back().y};
}

namespace {

struct CylinderGeometry {
  double dx, dy, rho, zrel, sign_z, dz;
};

CylinderGeometry cylinder_geometry(const Eigen::Vector3d& p,
                                   const Eigen::Vector3d& c,
                                   double half_height) {
  CylinderGeometry g{};
  g.dx = p.x() - c.x();
  g.dy = p.y() - c.y();
  g.rho = std::sqrt(g.dx * g.dx + g.dy * g.dy +
                    kDistanceSmoothing * kDistanceSmoothing);
  g.zrel = p.z() - c.z();
  g.sign_z = g.zrel >= 0.0 ? 1.0 : -1.0;
  g.dz = std::abs(g.zrel) - half_height;
  return g;
}

}  // namespace

double cylinder_residual(const Eigen::Vector3d& point,
                         const Eigen::Vector3d& center, double radius,
                         double half_height) {
  const auto g = cylinder_geometry(point, center, half_height);
  const double radial = radius - g.rho;
  if (g.dz <= 0.0) {
    // Within the vertical span: radial clearance outside, depth inside.
    return radial <= 0.0 ? radial : std::min(radial, -g.dz);
  }
  if (radial >= 0.0) return -g.dz;  // above or below a cap
  const double a = g.rho - radius;
  return -std::sqrt(a * a + g.dz * g.dz);  // nearest cap edge
}

Eigen::Vector3d cylinder_residual_gradient(const Eigen::Vector3d& point,
                                           const Eigen::Vector3d& center,
                                           double radius, double half_height) {
  const auto g = cylinder_geometry(point, center, half_height);
  const Eigen::Vector3d radial_dir(g.dx / g.rho, g.dy / g.rho, 0.0);
  const Eigen::Vector3d vertical_dir(0.0, 0.0, g.sign_z);
  const double radial = radius - g.rho;
  if (g.dz <= 0.0) {
    if (radial <= 0.0 || radial <= -g.dz) return -radial_dir;
    return -vertical_dir;
  }
  if (radial >= 0.0) return -vertical_dir;
  const double a = g.rho - radius;
  const double t = std::sqrt(a * a + g.dz * g.dz);
  return -(a * radial_dir + g.dz * vertical_dir) / t;
}

CylinderCollision::CylinderCollision(int quadrotor, std::vector<int> point,
                                     int human, std::vector<int> center,
                                     double radius, double height)
    : quad_(quadrotor),
      point_(std::move(point)),
      human_(human),
      center_(std::move(center)),
      radius_(radius),
      half_height_(0.5 * height) {
  if (point_.size() != 3 || center_.size() != 3) {
    throw InputError("cylinder_collision: needs 3-D point and center entries");
  }
}

CylinderCollision::CylinderCollision(int quadrotor, std::vector<int> point,
                                     ScriptedPath path, double center_height,
                                     double step_size, double radius,
                                     double height)
    : quad_(quadrotor),
      point_(std::move(point)),
      path_(std::move(path)),
      center_height_(center_height),
      step_size_(step_size),
      radius_(radius),
      half_height_(0.5 * height) {
  if (point_.size() != 3) {
    throw InputError("scripted_cylinder: needs a 3-D point");
  }
}

std::string CylinderCollision::type() const {
  return scripted() ? "scripted_cylinder" : "cylinder_collision";
}

ConstraintScope CylinderCollision::scope() const {
  if (scripted()) return {ScopeKind::PerAgent, {quad_}};
  return {ScopeKind::Pairwise, {quad_, human_}};
}

int CylinderCollision::required_state_dim() const {
  return std::max(max_index_plus_one(point_), max_index_plus_one(center_));
}

Eigen::Vector3d CylinderCollision::center_at(const Vec& x, int k) const {
  if (scripted()) {
    const Eigen::Vector2d xy = path_.at(k * step_size_);
    return {xy.x(), xy.y(), center_height_};
  }
  return {x[center_[0]], x[center_[1]], x[center_[2]]};
}

void CylinderCollision::evaluate(const Vec& x, const Vec&, int k,
                                 Eigen::Ref<Vec> out) const {
  const Eigen::Vector3d p(x[point_[0]], x[point_[1]], x[point_[2]]);
  out[0] = cylinder_residual(p, center_at(x, k), radius_, half_height_);
}

void CylinderCollision::analytic_jacobian(const Vec& x, const Vec&, int k,
                                          Eigen::Ref<Mat> jx,
                                          Eigen::Ref<Mat>) const {
  const Eigen::Vector3d p(x[point_[0]], x[point_[1]], x[point_[2]]);
  const Eigen::Vector3d grad =
      cylinder_residual_gradient(p, center_at(x, k), radius_, half_height_);
  for (int a = 0; a < 3; ++a) {
    jx(0, point_[a]) += grad[a];
    if (!scripted()) jx(0, center_[a]) -= grad[a];
  }
}

// --- FunctionConstraint ------------------------------------------------------

FunctionConstraint::FunctionConstraint(std::string type, ConstraintKind kind,
                                       ConstraintScope scope, int rows,
                                       bool uses_control,
                                       int required_state_dim,
                                       int required_control_dim, Fn fn)
    : type_(std::move(type)),
      kind_(kind),
      scope_(std::move(scope)),
      rows_(rows),
      uses_control_(uses_control),
      req_n_(required_state_dim),
      req_m_(required_control_dim),
      fn_(std::move(fn)) {}

void FunctionConstraint::evaluate(const Vec& x, const Vec& u, int k,
                                  Eigen::Ref<Vec> out) const {
  out = fn_(x, u, k);
}

// --- build_constraints -------------------------------------------------------

namespace {

struct Builder {
  const std::vector<AgentModelPtr>& models;
  BlockLayout layout;
  double step_size;
  ConstraintSet out;

  int agents() const { return static_cast<int>(models.size()); }

  void check_agent(int i, const std::string& what) const {
    if (i < 0 || i >= agents()) {
      std::ostringstream msg;
      msg << what << ": agent index " << i << " out of range [0, " << agents()
          << ")";
      throw InputError(msg.str());
    }
  }

  std::vector<int> resolve(const std::vector<int>& agents_in,
                           const std::string& what) const {
    std::vector<int> list = agents_in;
    if (list.empty()) {
      for (int i = 0; i < agents(); ++i) list.push_back(i);
    }
    for (int i : list) check_agent(i, what);
    return list;
  }

  std::vector<int> position(int agent, std::size_t dims) const {
    const auto local = models[agent]->position_indices();
    std::vector<int> idx;
    for (std::size_t a = 0; a < dims && a < local.size(); ++a) {
      idx.push_back(layout.state_offset[agent] + local[a]);
    }
    return idx;
  }

  std::size_t common_dims(int i, int j) const {
    return std::min(models[i]->position_indices().size(),
                    models[j]->position_indices().size());
  }

  void add_state_constraint(ConstraintPtr c) {
    out.stage.push_back(c);
    out.terminal.push_back(std::move(c));
  }

  void operator()(const PairwiseCollisionSpec& s) {
    const auto list = resolve(s.agents, "pairwise_collision");
    if (s.d_collision < 0.0) {
      throw InputError("pairwise_collision: d_collision must be >= 0");
    }
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a + 1; b < list.size(); ++b) {
        const int i = std::min(list[a], list[b]);
        const int j = std::max(list[a], list[b]);
        if (i == j) throw InputError("pairwise_collision: duplicate agent");
        const auto dims = common_dims(i, j);
        add_state_constraint(std::make_shared<PairwiseCollision>(
            i, j, position(i, dims), position(j, dims), s.d_collision));
      }
    }
  }

  void operator()(const ControlBoundSpec& s) {
    for (int i : resolve(s.agents, "control_bound")) {
      const int cd = layout.control_dim[i];
      if (static_cast<int>(s.bound.size()) != cd) {
        std::ostringstream msg;
        msg << "control_bound: agent " << i << " has " << cd
            << " controls but " << s.bound.size() << " bounds were given";
        throw InputError(msg.str());
      }
      std::vector<int> idx;
      for (int e = 0; e < cd; ++e) idx.push_back(layout.control_offset[i] + e);
      out.stage.push_back(std::make_shared<ControlBound>(
          i, idx, Eigen::Map<const Vec>(s.bound.data(), cd)));
    }
  }

  void operator()(const SpeedBoundSpec& s) {
    for (int i : resolve(s.agents, "speed_bound")) {
      std::vector<int> idx;
      for (int e : s.entries) {
        if (e < 0 || e >= layout.control_dim[i]) {
          throw InputError("speed_bound: control entry out of range");
        }
        idx.push_back(layout.control_offset[i] + e);
      }
      out.stage.push_back(std::make_shared<SpeedBound>(i, idx, s.max_speed));
    }
  }

  void operator()(const RodSpec& s) {
    check_agent(s.first, "rod");
    check_agent(s.second, "rod");
    if (s.first == s.second) throw InputError("rod: agents must differ");
    const auto dims = common_dims(s.first, s.second);
    add_state_constraint(std::make_shared<RodEquality>(
        s.first, s.second, position(s.first, dims), position(s.second, dims),
        s.length));
  }

  void operator()(const CylinderSpec& s) {
    check_agent(s.quadrotor, "cylinder_collision");
    check_agent(s.human, "cylinder_collision");
    const auto point = position(s.quadrotor, 3);
    const auto center = position(s.human, 3);
    if (point.size() != 3 || center.size() != 3) {
      throw InputError(
          "cylinder_collision: both agents need 3 position entries");
    }
    add_state_constraint(std::make_shared<CylinderCollision>(
        s.quadrotor, point, s.human, center, s.radius, s.height));
  }

  void operator()(const ScriptedCylinderSpec& s) {
    check_agent(s.quadrotor, "scripted_cylinder");
    const auto point = position(s.quadrotor, 3);
    if (point.size() != 3) {
      throw InputError("scripted_cylinder: agent needs 3 position entries");
    }
    if (s.waypoints.empty()) {
      throw InputError("scripted_cylinder: at least one waypoint required");
    }
    add_state_constraint(std::make_shared<CylinderCollision>(
        s.quadrotor, point, ScriptedPath{s.waypoints}, s.center_height,
        step_size, s.radius, s.height));
  }
};

}  // namespace

ConstraintSet build_constraints(const std::vector<ConstraintDescriptor>& specs,
                                const std::vector<AgentModelPtr>& models,
                                double step_size) {
  Builder builder{models, BlockLayout::from_models(models), step_size, {}};
  for (const auto& spec : specs) std::visit(builder, spec);
  return std::move(builder.out);
}

}  // namespace dpgame
