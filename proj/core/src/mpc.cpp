#include "dpgame/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dpgame/potential.hpp"

namespace dpgame {

int MPCConfig::planning_steps() const {
  if (!(step_size > 0.0) || !(horizon_seconds > 0.0)) {
    throw InputError("mpc: horizon and step size must be positive");
  }
  const double ratio = horizon_seconds / step_size;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1) {
    throw InputError("mpc: horizon must be a positive multiple of the step size");
  }
  return static_cast<int>(rounded);
}

void MPCConfig::validate() const {
  const int T = planning_steps();
  if (total_steps < 1) throw InputError("mpc: total_steps must be >= 1");
  if (replan_every < 1 || replan_every > T) {
    throw InputError("mpc: replan_every must be in [1, planning steps]");
  }
  solver.validate();
}

namespace {

void summarize(const GameSpec& spec, ClosedLoopLog& log) {
  const auto models = spec.models();
  const auto layout = spec.layout();
  const int N = spec.num_agents();

  log.min_pairwise_distance = std::numeric_limits<double>::infinity();
  for (const auto& x : log.states) {
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        const auto pi = models[i]->position_indices();
        const auto pj = models[j]->position_indices();
        const std::size_t d = std::min(pi.size(), pj.size());
        double sq = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          const double diff = x[layout.state_offset[i] + pi[a]] -
                              x[layout.state_offset[j] + pj[a]];
          sq += diff * diff;
        }
        log.min_pairwise_distance = std::min(log.min_pairwise_distance, std::sqrt(sq));
      }
    }
  }
  if (N < 2) log.min_pairwise_distance = 0.0;

  const Vec no_control = Vec::Zero(layout.m);
  log.min_cylinder_clearance = std::numeric_limits<double>::infinity();
  bool any_cylinder = false;
  log.rod_error.clear();
  for (std::size_t k = 0; k < log.states.size(); ++k) {
    double rod = 0.0;
    bool any_rod = false;
    const int abs_k = spec.start_step + static_cast<int>(k);
    for (const auto& c : spec.constraints.stage) {
      const std::string type = c->type();
      if (type == "rod") {
        any_rod = true;
        rod = std::max(rod, c->evaluate(log.states[k], no_control, abs_k)
                                .cwiseAbs()
                                .maxCoeff());
      } else if (type == "cylinder_collision" || type == "scripted_cylinder") {
        any_cylinder = true;
        log.min_cylinder_clearance =
            std::min(log.min_cylinder_clearance,
                     -c->evaluate(log.states[k], no_control, abs_k).maxCoeff());
      }
    }
    if (any_rod) log.rod_error.push_back(rod);
  }
  if (!any_cylinder) log.min_cylinder_clearance = 0.0;

  log.goal_error.assign(N, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < N; ++i) {
    const auto& params = spec.agents[i].cost.quadratic_params();
    if (!params) continue;
    double sq = 0.0;
    for (int p : models[i]->position_indices()) {
      const double diff =
          log.states.back()[layout.state_offset[i] + p] - params->goal[p];
      sq += diff * diff;
    }
    log.goal_error[i] = std::sqrt(sq);
  }

  log.max_step_violation = 0.0;
  for (double v : log.step_violation) {
    log.max_step_violation = std::max(log.max_step_violation, v);
  }
}

}  // namespace

ClosedLoopLog run_mpc(const GameSpec& spec, const MPCConfig& config) {
  config.validate();
  if (std::abs(spec.step_size - config.step_size) > 1e-12) {
    throw InputError("mpc: game step size differs from the configured step");
  }
  const int T = config.planning_steps();
  GameSpec base = spec;
  base.horizon = T;
  // Validates and audits once; replans only change x0 and the start step.
  assemble(base);

  const auto dyn = base.dynamics();
  const auto kinds = base.constraints.stage_row_kinds();
  const int m = dyn.control_dim();

  ClosedLoopLog log;
  log.states.push_back(base.initial_state);
  std::optional<ControlSequence> warm;
  MultiplierState warm_mult;
  int step = base.start_step;
  const int last = base.start_step + config.total_steps;

  for (int replan = 0; step < last; ++replan) {
    const GameSpec local = base.with_initial_state(log.states.back(), step);
    const PotentialOCP ocp(local);
    SolveResult sol;
    try {
      sol = solve(ocp, config.solver, warm,
                  warm_mult.empty() ? nullptr : &warm_mult);
    } catch (const DivergenceError& e) {
      log.failure = FailureRecord{replan, step, std::string("diverged: ") + e.what()};
      break;
    }

    ReplanRecord rec;
    rec.step = step;
    rec.converged = sol.converged;
    rec.objective = sol.objective;
    rec.plan_violation = sol.max_violation;
    rec.outer_iterations = sol.outer_iterations;
    rec.inner_iterations = sol.inner_iterations;
    rec.polished = sol.polished;
    rec.polish_warning = sol.polish_warning;
    rec.solve_ms = sol.solve_ms;
    // A plan that missed the multiplier gate but is feasible is still used.
    if (sol.max_violation > config.solver.constraint_tolerance) {
      log.replans.push_back(rec);
      std::ostringstream msg;
      msg << "no feasible plan: violation " << sol.max_violation << " after "
          << sol.outer_iterations << " outer iterations";
      log.failure = FailureRecord{replan, step, msg.str()};
      break;
    }

    const int apply = std::min(config.replan_every, last - step);
    for (int j = 0; j < apply; ++j) {
      const Vec& u = sol.trajectory.controls[j];
      const Vec& x = log.states.back();
      log.step_violation.push_back(
          violation(base.constraints.evaluate_stage(x, u, step), kinds));
      log.controls.push_back(u);
      log.states.push_back(dyn.step(x, u, step));
      rec.applied.push_back(u);
      ++step;
    }
    log.replans.push_back(std::move(rec));

    if (config.warm_start == WarmStart::Shift) {
      ControlSequence shifted(sol.trajectory.controls.begin() + apply,
                              sol.trajectory.controls.end());
      while (static_cast<int>(shifted.size()) < T) {
        shifted.push_back(sol.trajectory.controls.back());
      }
      warm = std::move(shifted);
      // Multipliers and penalties shift the same way.
      warm_mult = MultiplierState{};
      auto shift_rows = [&](const std::vector<Vec>& rows) {
        std::vector<Vec> out(rows.begin() + apply, rows.end());
        while (static_cast<int>(out.size()) < T) out.push_back(rows.back());
        return out;
      };
      if (!sol.multipliers.stage_lambda.empty()) {
        warm_mult.stage_lambda = shift_rows(sol.multipliers.stage_lambda);
        warm_mult.stage_penalty = shift_rows(sol.multipliers.stage_penalty);
      }
      warm_mult.terminal_lambda = sol.multipliers.terminal_lambda;
      warm_mult.terminal_penalty = sol.multipliers.terminal_penalty;
    } else {
      warm = ControlSequence(T, Vec::Zero(m));
    }
  }
  summarize(base, log);
  return log;
}

}  // namespace dpgame
