#include "dpgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

namespace dpgame {

std::vector<AgentModelPtr> GameSpec::models() const {
  std::vector<AgentModelPtr> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.model);
  return out;
}

BlockLayout GameSpec::layout() const {
  return BlockLayout::from_models(models());
}

JointDynamics GameSpec::dynamics() const {
  return JointDynamics(models(), step_size);
}

GameSpec GameSpec::with_initial_state(Vec x0, int first_step) const {
  GameSpec copy = *this;
  copy.initial_state = std::move(x0);
  copy.start_step = first_step;
  return copy;
}

namespace {

void add(ValidationReport& report, ValidationIssue::Kind kind,
         std::string message) {
  report.push_back({kind, std::move(message)});
}

bool finite(const Mat& m) { return m.allFinite(); }

}  // namespace

ValidationReport validate_spec(const GameSpec& spec) {
  using K = ValidationIssue::Kind;
  ValidationReport report;
  if (spec.agents.empty()) add(report, K::InvalidParameter, "no agents (N < 1)");
  if (spec.horizon < 1) {
    add(report, K::InvalidParameter,
        "horizon T = " + std::to_string(spec.horizon) + " must be >= 1");
  }
  if (!(spec.step_size > 0.0) || !std::isfinite(spec.step_size)) {
    add(report, K::InvalidParameter, "step size h must be finite and > 0");
  }
  for (std::size_t i = 0; i < spec.agents.size(); ++i) {
    const auto& a = spec.agents[i];
    const std::string who = "agent " + std::to_string(i);
    if (!a.model) add(report, K::InvalidParameter, who + ": missing model");
    if (!a.cost.defined()) add(report, K::MissingCost, who + ": missing cost");
  }
  if (!report.empty()) return report;

  const auto layout = spec.layout();
  if (spec.initial_state.size() != layout.n) {
    std::ostringstream msg;
    msg << "initial state has length " << spec.initial_state.size()
        << " but sum of agent state dims is " << layout.n;
    add(report, K::DimensionMismatch, msg.str());
  } else if (!spec.initial_state.allFinite()) {
    add(report, K::NonFinite, "initial state has non-finite entries");
  }

  for (std::size_t i = 0; i < spec.agents.size(); ++i) {
    const auto& q = spec.agents[i].cost.quadratic_params();
    if (!q) continue;
    const std::string who = "agent " + std::to_string(i) + " cost";
    if (q->state_offset != layout.state_offset[i] ||
        q->state_dim() != layout.state_dim[i] ||
        q->control_offset != layout.control_offset[i] ||
        q->control_dim() != layout.control_dim[i]) {
      add(report, K::DimensionMismatch,
          who + ": quadratic blocks do not match the agent layout");
    }
    if (!finite(q->Q) || !finite(q->C) || !finite(q->Qf) ||
        !q->goal.allFinite()) {
      add(report, K::NonFinite, who + ": non-finite weights or goal");
    }
  }

  for (const auto* list : {&spec.constraints.stage, &spec.constraints.terminal}) {
    const bool terminal = list == &spec.constraints.terminal;
    for (const auto& c : *list) {
      if (c->required_state_dim() > layout.n ||
          c->required_control_dim() > layout.m) {
        add(report, K::DimensionMismatch,
            c->type() + ": indexes outside the joint state/control");
      }
      if (terminal && c->uses_control()) {
        add(report, K::InvalidParameter,
            c->type() + ": terminal constraints cannot depend on controls");
      }
    }
  }
  return report;
}

std::string to_string(const ValidationReport& report) {
  std::ostringstream out;
  for (const auto& issue : report) out << issue.message << "\n";
  return out.str();
}

double Trajectory::max_violation() const {
  double worst = 0.0;
  for (double v : step_violation) worst = std::max(worst, v);
  return worst;
}

double agent_cost(const GameSpec& spec, int agent, const StateSequence& states,
                  const ControlSequence& controls) {
  const auto& cost = spec.agents[agent].cost;
  const int T = static_cast<int>(controls.size());
  double total = 0.0;
  for (int k = 0; k < T; ++k) {
    total += cost.running(states[k], controls[k], spec.start_step + k);
  }
  return total + cost.terminal(states[T]);
}

void evaluate_trajectory(const GameSpec& spec, Trajectory& traj) {
  const int T = traj.horizon();
  const auto& cs = spec.constraints;
  const auto stage_kinds = cs.stage_row_kinds();
  const auto terminal_kinds = cs.terminal_row_kinds();

  traj.step_violation.assign(T + 1, 0.0);
  for (int k = 0; k < T; ++k) {
    traj.step_violation[k] = violation(
        cs.evaluate_stage(traj.states[k], traj.controls[k], spec.start_step + k),
        stage_kinds);
  }
  traj.step_violation[T] = violation(
      cs.evaluate_terminal(traj.states[T], spec.start_step + T), terminal_kinds);

  traj.agent_costs.assign(spec.agents.size(), 0.0);
  for (int i = 0; i < spec.num_agents(); ++i) {
    traj.agent_costs[i] = agent_cost(spec, i, traj.states, traj.controls);
  }

  // Summed step-major (P then R), independently of the per-agent totals.
  double potential = 0.0;
  for (int k = 0; k < T; ++k) {
    double stage = 0.0;
    for (const auto& a : spec.agents) {
      stage += a.cost.running(traj.states[k], traj.controls[k],
                              spec.start_step + k);
    }
    potential += stage;
  }
  for (const auto& a : spec.agents) potential += a.cost.terminal(traj.states[T]);
  traj.potential_value = potential;
}

Trajectory rollout(const GameSpec& spec, const Vec& x0,
                   const ControlSequence& controls) {
  const auto dynamics = spec.dynamics();
  const int n = dynamics.state_dim(), m = dynamics.control_dim();
  if (x0.size() != n) {
    throw InputError("rollout: initial state has length " +
                     std::to_string(x0.size()) + ", expected " +
                     std::to_string(n));
  }
  if (static_cast<int>(controls.size()) != spec.horizon) {
    throw InputError("rollout: " + std::to_string(controls.size()) +
                     " controls for horizon " + std::to_string(spec.horizon));
  }
  for (std::size_t k = 0; k < controls.size(); ++k) {
    if (controls[k].size() != m) {
      throw InputError("rollout: control " + std::to_string(k) +
                       " has wrong length");
    }
    if (!controls[k].allFinite()) {
      throw DivergenceError("rollout: non-finite control at step " +
                            std::to_string(k));
    }
  }
  Trajectory traj;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(x0);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    Vec next = dynamics.step(traj.states.back(), controls[k],
                             spec.start_step + static_cast<int>(k));
    if (!next.allFinite()) {
      throw DivergenceError("rollout: non-finite state at step " +
                            std::to_string(k + 1));
    }
    traj.states.push_back(std::move(next));
  }
  evaluate_trajectory(spec, traj);
  return traj;
}

double max_violation(const GameSpec& spec, const Trajectory& traj) {
  const int T = traj.horizon();
  const auto& cs = spec.constraints;
  double worst = 0.0;
  auto update = [&](const Vec& values, const std::vector<ConstraintKind>& kinds) {
    const Vec rows = to_inequality_view(values, kinds);
    for (Eigen::Index r = 0; r < rows.size(); ++r) {
      worst = std::max(worst, std::max(rows[r], 0.0));
    }
  };
  const auto stage_kinds = cs.stage_row_kinds();
  for (int k = 0; k < T; ++k) {
    update(cs.evaluate_stage(traj.states[k], traj.controls[k], spec.start_step + k),
           stage_kinds);
  }
  update(cs.evaluate_terminal(traj.states[T], spec.start_step + T),
         cs.terminal_row_kinds());
  return worst;
}

ControlSequence zero_controls(const GameSpec& spec) {
  return ControlSequence(spec.horizon, Vec::Zero(spec.layout().m));
}

SeparabilityReport audit_separability(const GameSpec& spec, int samples,
                                      std::uint64_t seed) {
  const auto layout = spec.layout();
  const int N = spec.num_agents();
  SeparabilityReport report;
  report.samples = samples;
  if (N <= 1) return report;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_int_distribution<int> step(0, std::max(spec.horizon - 1, 0));

  using Key = std::tuple<int, int, bool, bool>;
  std::map<Key, double> worst;

  auto sensitivity = [](auto&& f, Vec& v, int idx) {
    const double v0 = v[idx];
    const double h = 1e-5 * (1.0 + std::abs(v0));
    v[idx] = v0 + h;
    const double fp = f();
    v[idx] = v0 - h;
    const double fm = f();
    v[idx] = v0;
    return std::abs(fp - fm) / (2.0 * h);
  };

  for (int s = 0; s < samples; ++s) {
    Vec x(layout.n), u(layout.m);
    for (int r = 0; r < layout.n; ++r) x[r] = coord(rng);
    for (int r = 0; r < layout.m; ++r) u[r] = coord(rng);
    const int k = spec.start_step + step(rng);

    for (int i = 0; i < N; ++i) {
      const auto& cost = spec.agents[i].cost;
      auto running = [&] { return cost.running(x, u, k); };
      auto terminal = [&] { return cost.terminal(x); };
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        for (int r = 0; r < layout.state_dim[j]; ++r) {
          const int idx = layout.state_offset[j] + r;
          auto& wr = worst[{i, j, false, false}];
          wr = std::max(wr, sensitivity(running, x, idx));
          auto& wt = worst[{i, j, true, false}];
          wt = std::max(wt, sensitivity(terminal, x, idx));
        }
        for (int r = 0; r < layout.control_dim[j]; ++r) {
          const int idx = layout.control_offset[j] + r;
          auto& wu = worst[{i, j, false, true}];
          wu = std::max(wu, sensitivity(running, u, idx));
        }
      }
    }
  }

  for (const auto& [key, magnitude] : worst) {
    report.max_cross_sensitivity =
        std::max(report.max_cross_sensitivity, magnitude);
    if (magnitude > kSeparabilityTolerance) {
      const auto& [agent, other, terminal, control] = key;
      report.offenses.push_back({agent, other, terminal, control, magnitude});
    }
  }
  report.passed = report.offenses.empty();
  return report;
}

}  // namespace dpgame
