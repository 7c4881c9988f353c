#include "derivative_checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "dpgame/constraints.hpp"
#include "dpgame/dynamics.hpp"
#include "dpgame/potential.hpp"

namespace dpgame::testing {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd central(const std::function<VectorXd(const VectorXd&)>& f, const VectorXd& x) {
  const VectorXd f0 = f(x);
  MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

double rel_error(const MatrixXd& analytic, const MatrixXd& fd) {
  if (analytic.size() == 0) return 0.0;
  return (analytic - fd).cwiseAbs().maxCoeff() / (1.0 + analytic.cwiseAbs().maxCoeff());
}

struct Sampler {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> unit{-1.0, 1.0};

  // Positions in [-2, 2], headings in [-pi, pi], heights near 1.
  VectorXd state(const std::vector<AgentModelPtr>& models) {
    const auto layout = BlockLayout::from_models(models);
    VectorXd x(layout.n);
    for (int i = 0; i < layout.agents(); ++i) {
      for (int r = 0; r < layout.state_dim[i]; ++r) x[layout.state_offset[i] + r] = 2.0 * unit(rng);
      if (const auto h = models[i]->heading_index()) x[layout.state_offset[i] + *h] = std::numbers::pi * unit(rng);
      if (models[i]->id() == "human_unicycle") x[layout.state_offset[i] + 2] = 1.0 + 0.5 * unit(rng);
    }
    return x;
  }
  VectorXd control(int m) {
    VectorXd u(m);
    for (int r = 0; r < m; ++r) u[r] = 2.0 * unit(rng);
    return u;
  }
  int step() { return std::uniform_int_distribution<int>(0, 60)(rng); }
};

void check_dynamics(const std::string& name, std::vector<AgentModelPtr> models, int points,
                    Sampler& s, std::vector<DerivativeCheck>& out) {
  const JointDynamics dyn(models, 0.1);
  DerivativeCheck c{name, points, 0.0};
  for (int p = 0; p < points; ++p) {
    const VectorXd x = s.state(models), u = s.control(dyn.control_dim());
    const int k = s.step();
    MatrixXd A, B;
    dyn.jacobians(x, u, k, A, B);
    const MatrixXd Afd = central([&](const VectorXd& xx) { return dyn.step(xx, u, k); }, x);
    const MatrixXd Bfd = central([&](const VectorXd& uu) { return dyn.step(x, uu, k); }, u);
    c.max_error = std::max({c.max_error, rel_error(A, Afd), rel_error(B, Bfd)});
  }
  out.push_back(c);
}

void check_constraints(const std::string& prefix, const std::vector<AgentModelPtr>& models,
                       const std::vector<ConstraintDescriptor>& descriptors, int points,
                       Sampler& s, std::vector<DerivativeCheck>& out) {
  const auto set = build_constraints(descriptors, models, 0.1);
  const auto layout = BlockLayout::from_models(models);
  // One entry per constraint type; several instances of a type share it.
  std::vector<std::string> types;
  for (const auto& c : set.stage) {
    if (std::find(types.begin(), types.end(), c->type()) == types.end()) types.push_back(c->type());
  }
  for (const auto& type : types) {
    DerivativeCheck check{prefix + "/" + type, points, 0.0};
    for (const auto& c : set.stage) {
      if (c->type() != type || !c->has_analytic_jacobian()) continue;
      for (int p = 0; p < points; ++p) {
        const VectorXd x = s.state(models), u = s.control(layout.m);
        const int k = s.step();
        MatrixXd jx = MatrixXd::Zero(c->rows(), layout.n), ju = MatrixXd::Zero(c->rows(), layout.m);
        c->analytic_jacobian(x, u, k, jx, ju);
        const MatrixXd jxfd = central([&](const VectorXd& xx) { return c->evaluate(xx, u, k); }, x);
        const MatrixXd jufd = central([&](const VectorXd& uu) { return c->evaluate(x, uu, k); }, u);
        check.max_error = std::max({check.max_error, rel_error(jx, jxfd), rel_error(ju, jufd)});
      }
    }
    out.push_back(check);
  }
}

GameSpec quadratic_game(const std::vector<AgentModelPtr>& models, Sampler& s) {
  GameSpec spec;
  spec.step_size = 0.1;
  spec.horizon = 10;
  const auto layout = BlockLayout::from_models(models);
  for (int i = 0; i < layout.agents(); ++i) {
    const int n = layout.state_dim[i], m = layout.control_dim[i];
    auto weights = [&](int d) {
      VectorXd w(d);
      for (int r = 0; r < d; ++r) w[r] = 1.0 + 0.5 * s.unit(s.rng);
      return MatrixXd(w.asDiagonal());
    };
    QuadraticCostParams p;
    p.state_offset = layout.state_offset[i];
    p.control_offset = layout.control_offset[i];
    p.Q = weights(n);
    p.C = weights(m);
    p.Qf = 10.0 * weights(n);
    p.goal = s.state({models[i]});
    spec.agents.push_back({"agent" + std::to_string(i), models[i], AgentCost::quadratic(p)});
  }
  spec.initial_state = VectorXd::Zero(layout.n);
  return spec;
}

void check_costs(const std::string& name, const std::vector<AgentModelPtr>& models, int points,
                 Sampler& s, std::vector<DerivativeCheck>& out) {
  const PotentialOCP ocp(quadratic_game(models, s));
  const int m = ocp.control_dim();
  DerivativeCheck running{name + "/running", points, 0.0};
  DerivativeCheck terminal{name + "/terminal", points, 0.0};
  for (int p = 0; p < points; ++p) {
    const VectorXd x = s.state(models), u = s.control(m);
    const int k = s.step() % ocp.horizon();
    const StageExpansion e = ocp.running_expansion(x, u, k);
    auto value = [&](const VectorXd& xx, const VectorXd& uu) {
      return VectorXd::Constant(1, ocp.running_cost(xx, uu, k));
    };
    const MatrixXd gx = central([&](const VectorXd& xx) { return value(xx, u); }, x);
    const MatrixXd gu = central([&](const VectorXd& uu) { return value(x, uu); }, u);
    const MatrixXd hxx = central([&](const VectorXd& xx) { return VectorXd(ocp.running_expansion(xx, u, k).lx); }, x);
    const MatrixXd huu = central([&](const VectorXd& uu) { return VectorXd(ocp.running_expansion(x, uu, k).lu); }, u);
    const MatrixXd hux = central([&](const VectorXd& xx) { return VectorXd(ocp.running_expansion(xx, u, k).lu); }, x);
    running.max_error = std::max({running.max_error, rel_error(e.lx.transpose(), gx),
                                  rel_error(e.lu.transpose(), gu), rel_error(e.lxx, hxx),
                                  rel_error(e.luu, huu), rel_error(e.lux, hux)});

    const TerminalExpansion t = ocp.terminal_expansion(x);
    const MatrixXd tg = central([&](const VectorXd& xx) { return VectorXd::Constant(1, ocp.terminal_cost(xx)); }, x);
    const MatrixXd th = central([&](const VectorXd& xx) { return VectorXd(ocp.terminal_expansion(xx).lx); }, x);
    terminal.max_error = std::max({terminal.max_error, rel_error(t.lx.transpose(), tg), rel_error(t.lxx, th)});
  }
  out.push_back(running);
  out.push_back(terminal);
}

}  // namespace

std::vector<DerivativeCheck> run_derivative_checks(int points, std::uint64_t seed) {
  Sampler s{std::mt19937_64(seed)};
  std::vector<DerivativeCheck> out;

  const auto uni = make_model("unicycle");
  const auto human = make_model("human_unicycle");
  const auto quad = make_model("integrator6");
  MatrixXd A(3, 3), B(3, 2);
  A << 1.0, 0.1, 0.0, -0.2, 0.9, 0.3, 0.0, 0.05, 1.1;
  B << 0.1, 0.0, 0.3, -0.2, 0.0, 0.5;
  const AgentModelPtr linear = std::make_shared<LinearModel>(A, B);

  check_dynamics("dynamics/unicycle", {uni, uni}, points, s, out);
  check_dynamics("dynamics/human_unicycle", {human, human}, points, s, out);
  check_dynamics("dynamics/integrator6", {quad, quad}, points, s, out);
  check_dynamics("dynamics/linear", {linear, linear}, points, s, out);

  check_constraints("constraints/planar", {uni, uni, uni, uni},
                    {PairwiseCollisionSpec{{}, 0.3}, ControlBoundSpec{{}, {3.0, 3.0}}},
                    points, s, out);
  check_constraints(
      "constraints/rod_carry", {quad, quad, human, human},
      {RodSpec{0, 1, 0.5}, SpeedBoundSpec{{0, 1}, {0, 1, 2}, 1.2},
       PairwiseCollisionSpec{{2, 3}, 1.0}, CylinderSpec{0, 2, std::sqrt(0.4), 2.0},
       ScriptedCylinderSpec{1, {{0.0, -1.0, 0.0}, {3.0, 1.0, 1.0}}, 1.0, std::sqrt(0.4), 2.0}},
      points, s, out);

  check_costs("cost/unicycle", {uni, uni, uni, uni}, points, s, out);
  check_costs("cost/rod_carry", {quad, quad, human, human}, points, s, out);
  return out;
}

}  // namespace dpgame::testing
