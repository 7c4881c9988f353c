#include "dpgame/cost.hpp"

#include "dpgame/numerics.hpp"

namespace dpgame {

StageExpansion StageExpansion::zero(int n, int m) {
  StageExpansion e;
  e.lx = Vec::Zero(n);
  e.lu = Vec::Zero(m);
  e.lxx = Mat::Zero(n, n);
  e.luu = Mat::Zero(m, m);
  e.lux = Mat::Zero(m, n);
  return e;
}

StageExpansion& StageExpansion::operator+=(const StageExpansion& other) {
  lx += other.lx;
  lu += other.lu;
  lxx += other.lxx;
  luu += other.luu;
  lux += other.lux;
  return *this;
}

TerminalExpansion TerminalExpansion::zero(int n) {
  return {Vec::Zero(n), Mat::Zero(n, n)};
}

AgentCost AgentCost::quadratic(QuadraticCostParams p) {
  if (p.Q.rows() != p.Q.cols() || p.Qf.rows() != p.Q.rows() ||
      p.Qf.cols() != p.Q.rows() || p.C.rows() != p.C.cols() ||
      p.goal.size() != p.Q.rows()) {
    throw InputError("quadratic cost: inconsistent Q/Qf/C/goal dimensions");
  }
  AgentCost cost;
  const auto params = p;
  cost.running_ = [params](const Vec& x, const Vec& u, int) {
    const Vec dx =
        x.segment(params.state_offset, params.state_dim()) - params.goal;
    const Vec ui = u.segment(params.control_offset, params.control_dim());
    return 0.5 * dx.dot(params.Q * dx) + 0.5 * ui.dot(params.C * ui);
  };
  cost.terminal_ = [params](const Vec& x) {
    const Vec dx =
        x.segment(params.state_offset, params.state_dim()) - params.goal;
    return 0.5 * dx.dot(params.Qf * dx);
  };
  cost.quad_ = std::move(p);
  return cost;
}

AgentCost AgentCost::custom(RunningFn running, TerminalFn terminal) {
  AgentCost cost;
  cost.running_ = std::move(running);
  cost.terminal_ = std::move(terminal);
  return cost;
}

double AgentCost::running(const Vec& x, const Vec& u, int k) const {
  return running_(x, u, k);
}

double AgentCost::terminal(const Vec& x) const {
  return terminal_ ? terminal_(x) : 0.0;
}

void AgentCost::add_running_expansion(const Vec& x, const Vec& u,
                                      StageExpansion& out) const {
  if (!quad_) throw Error("add_running_expansion requires a quadratic cost");
  const auto& p = *quad_;
  const int so = p.state_offset, sd = p.state_dim();
  const int co = p.control_offset, cd = p.control_dim();
  const Vec dx = x.segment(so, sd) - p.goal;
  out.lx.segment(so, sd) += p.Q * dx;
  out.lu.segment(co, cd) += p.C * u.segment(co, cd);
  out.lxx.block(so, so, sd, sd) += p.Q;
  out.luu.block(co, co, cd, cd) += p.C;
}

void AgentCost::add_terminal_expansion(const Vec& x,
                                       TerminalExpansion& out) const {
  if (!quad_) throw Error("add_terminal_expansion requires a quadratic cost");
  const auto& p = *quad_;
  const int so = p.state_offset, sd = p.state_dim();
  out.lx.segment(so, sd) += p.Qf * (x.segment(so, sd) - p.goal);
  out.lxx.block(so, so, sd, sd) += p.Qf;
}

StageExpansion fd_stage_expansion(
    const std::function<double(const Vec&, const Vec&)>& cost, const Vec& x,
    const Vec& u) {
  const auto n = x.size(), m = u.size();
  Vec z(n + m);
  z << x, u;
  auto f = [&](const Vec& zz) { return cost(zz.head(n), zz.tail(m)); };
  const Vec g = numerics::central_gradient(f, z);
  const Mat H = numerics::central_hessian(f, z);
  StageExpansion e;
  e.lx = g.head(n);
  e.lu = g.tail(m);
  e.lxx = H.topLeftCorner(n, n);
  e.luu = H.bottomRightCorner(m, m);
  e.lux = H.bottomLeftCorner(m, n);
  return e;
}

TerminalExpansion fd_terminal_expansion(
    const std::function<double(const Vec&)>& cost, const Vec& x) {
  return {numerics::central_gradient(cost, x),
          numerics::central_hessian(cost, x)};
}

}  // namespace dpgame
