#include "output.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dpgame::app {

Json to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const std::vector<Vec>& seq) {
  Json out = Json::array();
  for (const auto& v : seq) out.push_back(to_json(v));
  return out;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

std::vector<Vec> seq_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of vectors");
  std::vector<Vec> out;
  for (const auto& v : j) out.push_back(vec_from_json(v));
  return out;
}

Json options_json(const SolverOptions& o) {
  Json j;
  j["constraint_tolerance"] = o.constraint_tolerance;
  j["complementarity_tolerance"] = o.complementarity_tolerance;
  j["stationarity_tolerance"] = o.stationarity_tolerance;
  j["cost_tolerance"] = o.cost_tolerance;
  j["gradient_tolerance"] = o.gradient_tolerance;
  j["max_outer_iterations"] = o.max_outer_iterations;
  j["max_inner_iterations"] = o.max_inner_iterations;
  j["penalty_initial"] = o.penalty_initial;
  j["penalty_scale"] = o.penalty_scale;
  j["penalty_max"] = o.penalty_max;
  j["regularization_initial"] = o.regularization_initial;
  j["regularization_min"] = o.regularization_min;
  j["regularization_max"] = o.regularization_max;
  j["regularization_factor"] = o.regularization_factor;
  j["line_search_factor"] = o.line_search_factor;
  j["min_step"] = o.min_step;
  j["projection_polish"] = o.projection_polish;
  j["active_set_factor"] = o.active_set_factor;
  j["max_polish_steps"] = o.max_polish_steps;
  j["polish_tolerance"] = o.polish_tolerance;
  j["time_budget_ms"] = o.time_budget_ms ? Json(*o.time_budget_ms) : Json(nullptr);
  return j;
}

Json layout_json(const GameSpec& spec) {
  const auto layout = spec.layout();
  Json agents = Json::array();
  for (int i = 0; i < spec.num_agents(); ++i) {
    const auto& model = spec.agents[i].model;
    Json a;
    a["name"] = spec.agents[i].name;
    a["model"] = model->id();
    a["state_offset"] = layout.state_offset[i];
    a["state_dim"] = layout.state_dim[i];
    a["control_offset"] = layout.control_offset[i];
    a["control_dim"] = layout.control_dim[i];
    a["position_indices"] = model->position_indices();
    const auto heading = model->heading_index();
    a["heading_index"] = heading ? Json(*heading) : Json(nullptr);
    agents.push_back(std::move(a));
  }
  return agents;
}

Json trajectory_json(const Trajectory& traj) {
  Json j;
  j["states"] = to_json(traj.states);
  j["controls"] = to_json(traj.controls);
  j["step_violation"] = traj.step_violation;
  j["agent_costs"] = traj.agent_costs;
  j["potential"] = traj.potential_value;
  return j;
}

Json multipliers_json(const MultiplierState& m) {
  Json j;
  j["stage_lambda"] = to_json(m.stage_lambda);
  j["stage_penalty"] = to_json(m.stage_penalty);
  j["terminal_lambda"] = to_json(m.terminal_lambda);
  j["terminal_penalty"] = to_json(m.terminal_penalty);
  return j;
}

MultiplierState multipliers_from_json(const Json& j) {
  MultiplierState m;
  m.stage_lambda = seq_from_json(j.at("stage_lambda"));
  m.stage_penalty = seq_from_json(j.at("stage_penalty"));
  m.terminal_lambda = vec_from_json(j.at("terminal_lambda"));
  m.terminal_penalty = vec_from_json(j.at("terminal_penalty"));
  return m;
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json certificate_json(const NashCertificate& c) {
  Json j;
  j["passed"] = c.passed();
  j["kkt_passed"] = c.kkt_passed();
  j["converged"] = c.converged;
  j["primal_feasibility"] = c.primal_feasibility;
  j["complementarity"] = c.complementarity;
  j["multipliers_consistent"] = c.multipliers_consistent;
  j["multiplier_mismatch"] = c.multiplier_mismatch;
  j["tolerances"] = Json{{"stationarity", c.tolerances.stationarity},
                         {"feasibility", c.tolerances.feasibility},
                         {"complementarity", c.tolerances.complementarity},
                         {"gap_relative", c.tolerances.gap_relative}};
  Json agents = Json::array();
  for (const auto& a : c.agents) {
    Json e;
    e["state_stationarity"] = a.state_stationarity;
    e["control_stationarity"] = a.control_stationarity;
    e["terminal_stationarity"] = a.terminal_stationarity;
    e["candidate_cost"] = a.candidate_cost;
    if (a.gap_evaluated) {
      e["best_response_cost"] = number_or_null(a.best_response_cost);
      e["best_response_gap"] = number_or_null(a.best_response_gap);
      e["gap_indeterminate"] = a.gap_indeterminate;
      if (!a.gap_diagnostics.empty()) e["gap_diagnostics"] = a.gap_diagnostics;
    }
    agents.push_back(std::move(e));
  }
  j["agents"] = std::move(agents);
  return j;
}

Json solve_result_json(const SolveResult& r) {
  Json j;
  j["converged"] = r.converged;
  j["budget_exceeded"] = r.budget_exceeded;
  j["polished"] = r.polished;
  j["polish_warning"] = r.polish_warning;
  j["outer_iterations"] = r.outer_iterations;
  j["inner_iterations"] = r.inner_iterations;
  j["regularization_increases"] = r.regularization_increases;
  j["max_violation"] = r.max_violation;
  j["objective"] = r.objective;
  Json history = Json::array();
  for (const auto& h : r.history) {
    history.push_back(Json{{"objective", h.objective},
                           {"violation", h.violation},
                           {"complementarity", h.complementarity},
                           {"stationarity", h.stationarity},
                           {"max_penalty", h.max_penalty},
                           {"inner_iterations", h.inner_iterations}});
  }
  j["history"] = std::move(history);
  j["trajectory"] = trajectory_json(r.trajectory);
  j["multipliers"] = multipliers_json(r.multipliers);
  j["costates"] = to_json(r.costates);
  return j;
}

SolveResult solve_result_from_json(const Json& j) {
  SolveResult r;
  try {
    r.converged = j.at("converged").get<bool>();
    r.max_violation = j.at("max_violation").get<double>();
    r.objective = j.at("objective").get<double>();
    r.outer_iterations = j.at("outer_iterations").get<int>();
    r.inner_iterations = j.at("inner_iterations").get<int>();
    const auto& t = j.at("trajectory");
    r.trajectory.states = seq_from_json(t.at("states"));
    r.trajectory.controls = seq_from_json(t.at("controls"));
    r.multipliers = multipliers_from_json(j.at("multipliers"));
    r.costates = seq_from_json(j.at("costates"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed solve result: ") + e.what());
  }
  return r;
}

Json violation_report(const GameSpec& spec, const Trajectory& traj, int count) {
  struct Row {
    int step;
    int row;
    std::string type;
    double value;
  };
  std::vector<Row> rows;
  auto scan = [&](const std::vector<ConstraintPtr>& list, const Vec& x,
                  const Vec& u, int k, int step) {
    int row = 0;
    for (const auto& c : list) {
      const Vec g = c->evaluate(x, u, k);
      for (Eigen::Index r = 0; r < g.size(); ++r) {
        const double v = c->kind() == ConstraintKind::Equality
                             ? std::abs(g[r])
                             : std::max(g[r], 0.0);
        if (v > 0.0) rows.push_back({step, row + static_cast<int>(r), c->type(), v});
      }
      row += c->rows();
    }
  };
  const int T = traj.horizon();
  for (int k = 0; k < T; ++k) {
    scan(spec.constraints.stage, traj.states[k], traj.controls[k],
         spec.start_step + k, k);
  }
  if (!traj.states.empty()) {
    scan(spec.constraints.terminal, traj.states.back(), Vec(),
         spec.start_step + T, T);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.value > b.value; });
  Json out = Json::array();
  for (int i = 0; i < count && i < static_cast<int>(rows.size()); ++i) {
    out.push_back(Json{{"step", rows[i].step},
                       {"row", rows[i].row},
                       {"type", rows[i].type},
                       {"violation", rows[i].value}});
  }
  return out;
}

Json mpc_config_json(const MPCConfig& cfg) {
  return Json{{"horizon_seconds", cfg.horizon_seconds},
              {"step_size", cfg.step_size},
              {"total_steps", cfg.total_steps},
              {"warm_start", cfg.warm_start == WarmStart::Shift ? "shift" : "zero"},
              {"replan_every", cfg.replan_every}};
}

Json mpc_log_json(const ClosedLoopLog& log) {
  Json j;
  j["ok"] = log.ok();
  if (log.failure) {
    j["failure"] = Json{{"replan", log.failure->replan},
                        {"step", log.failure->step},
                        {"reason", log.failure->reason}};
  } else {
    j["failure"] = nullptr;
  }
  double rod = 0.0;
  for (double e : log.rod_error) rod = std::max(rod, e);
  Json goal = Json::array();
  for (double g : log.goal_error) goal.push_back(number_or_null(g));
  j["summary"] = Json{{"replans", log.replans.size()},
                      {"steps", log.controls.size()},
                      {"min_pairwise_distance", log.min_pairwise_distance},
                      {"min_cylinder_clearance", log.min_cylinder_clearance},
                      {"max_rod_error", rod},
                      {"max_step_violation", log.max_step_violation},
                      {"goal_error", goal}};
  j["states"] = to_json(log.states);
  j["controls"] = to_json(log.controls);
  j["step_violation"] = log.step_violation;
  j["rod_error"] = log.rod_error;
  Json replans = Json::array();
  double total_ms = 0.0;
  for (const auto& r : log.replans) {
    total_ms += r.solve_ms;
    replans.push_back(Json{{"step", r.step},
                           {"converged", r.converged},
                           {"objective", r.objective},
                           {"plan_violation", r.plan_violation},
                           {"outer_iterations", r.outer_iterations},
                           {"inner_iterations", r.inner_iterations},
                           {"polished", r.polished},
                           {"polish_warning", r.polish_warning},
                           {"applied", to_json(r.applied)},
                           {"timing", Json{{"solve_ms", r.solve_ms}}}});
  }
  j["replans"] = std::move(replans);
  j["timing"] = Json{{"total_solve_ms", total_ms}};
  return j;
}

Json strip_timing(const Json& j) {
  if (j.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : j.items()) {
      if (k != "timing") out[k] = strip_timing(v);
    }
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(strip_timing(v));
    return out;
  }
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

void write_json(const std::string& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace dpgame::app
