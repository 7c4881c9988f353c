#include "scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dpgame::app {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError("scenario" + (path.empty() ? std::string() : " " + path) +
                   ": " + what);
}

void check_keys(const Json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(path + "/" + key, "unknown field '" + key + "'");
  }
}

const Json& required(const Json& obj, const std::string& path,
                     const std::string& key) {
  if (!obj.contains(key)) fail(path, "missing field '" + key + "'");
  return obj.at(key);
}

double number(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "expected a finite number");
  return d;
}

int integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::string text(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Vec vector(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        number(v[i], path + "/" + std::to_string(i));
  }
  return out;
}

std::vector<int> indices(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(integer(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

Mat matrix(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) {
    fail(path, "expected a matrix (array of rows)");
  }
  const auto rows = v.size(), cols = v[0].size();
  Mat out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    const Vec row = vector(v[r], rp);
    if (static_cast<std::size_t>(row.size()) != cols) fail(rp, "ragged matrix row");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

Weight weight(const Json& v, const std::string& path) {
  Weight w;
  if (v.is_array() && !v.empty() && v[0].is_array()) {
    w.diagonal = false;
    w.value = matrix(v, path);
  } else {
    w.diagonal = true;
    w.value = vector(v, path);
  }
  return w;
}

Json to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const Mat& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(to_json(Vec(m.row(r).transpose())));
  }
  return out;
}

Json to_json(const Weight& w) {
  return w.diagonal ? to_json(Vec(w.value.col(0))) : to_json(w.value);
}

Json to_json_indices(const std::vector<int>& v) {
  Json out = Json::array();
  for (int i : v) out.push_back(i);
  return out;
}

ConstraintDescriptor parse_constraint(const Json& c, const std::string& path) {
  const std::string type = text(required(c, path, "type"), path + "/type");
  if (type == "pairwise_collision") {
    check_keys(c, path, {"type", "agents", "d_collision"});
    PairwiseCollisionSpec s;
    if (c.contains("agents")) s.agents = indices(c["agents"], path + "/agents");
    s.d_collision = number(required(c, path, "d_collision"), path + "/d_collision");
    return s;
  }
  if (type == "control_bound") {
    check_keys(c, path, {"type", "agents", "bound"});
    ControlBoundSpec s;
    if (c.contains("agents")) s.agents = indices(c["agents"], path + "/agents");
    const Vec b = vector(required(c, path, "bound"), path + "/bound");
    s.bound.assign(b.data(), b.data() + b.size());
    return s;
  }
  if (type == "speed_bound") {
    check_keys(c, path, {"type", "agents", "entries", "max_speed"});
    SpeedBoundSpec s;
    if (c.contains("agents")) s.agents = indices(c["agents"], path + "/agents");
    s.entries = indices(required(c, path, "entries"), path + "/entries");
    s.max_speed = number(required(c, path, "max_speed"), path + "/max_speed");
    return s;
  }
  if (type == "rod") {
    check_keys(c, path, {"type", "first", "second", "length"});
    RodSpec s;
    s.first = integer(required(c, path, "first"), path + "/first");
    s.second = integer(required(c, path, "second"), path + "/second");
    s.length = number(required(c, path, "length"), path + "/length");
    return s;
  }
  if (type == "cylinder_collision") {
    check_keys(c, path, {"type", "quadrotor", "human", "radius", "height"});
    CylinderSpec s;
    s.quadrotor = integer(required(c, path, "quadrotor"), path + "/quadrotor");
    s.human = integer(required(c, path, "human"), path + "/human");
    s.radius = number(required(c, path, "radius"), path + "/radius");
    s.height = number(required(c, path, "height"), path + "/height");
    return s;
  }
  if (type == "scripted_cylinder") {
    check_keys(c, path, {"type", "quadrotor", "waypoints", "center_height",
                         "radius", "height"});
    ScriptedCylinderSpec s;
    s.quadrotor = integer(required(c, path, "quadrotor"), path + "/quadrotor");
    const auto& wps = required(c, path, "waypoints");
    if (!wps.is_array() || wps.empty()) fail(path + "/waypoints", "expected [[t, x, y], ...]");
    for (std::size_t i = 0; i < wps.size(); ++i) {
      const std::string wp = path + "/waypoints/" + std::to_string(i);
      const Vec w = vector(wps[i], wp);
      if (w.size() != 3) fail(wp, "waypoint must be [t, x, y]");
      s.waypoints.push_back({w[0], w[1], w[2]});
    }
    s.center_height =
        number(required(c, path, "center_height"), path + "/center_height");
    s.radius = number(required(c, path, "radius"), path + "/radius");
    s.height = number(required(c, path, "height"), path + "/height");
    return s;
  }
  fail(path + "/type", "unknown constraint type '" + type + "'");
}

struct ConstraintWriter {
  Json operator()(const PairwiseCollisionSpec& s) const {
    Json j{{"type", "pairwise_collision"}};
    if (!s.agents.empty()) j["agents"] = to_json_indices(s.agents);
    j["d_collision"] = s.d_collision;
    return j;
  }
  Json operator()(const ControlBoundSpec& s) const {
    Json j{{"type", "control_bound"}};
    if (!s.agents.empty()) j["agents"] = to_json_indices(s.agents);
    j["bound"] = s.bound;
    return j;
  }
  Json operator()(const SpeedBoundSpec& s) const {
    Json j{{"type", "speed_bound"}};
    if (!s.agents.empty()) j["agents"] = to_json_indices(s.agents);
    j["entries"] = to_json_indices(s.entries);
    j["max_speed"] = s.max_speed;
    return j;
  }
  Json operator()(const RodSpec& s) const {
    return Json{{"type", "rod"}, {"first", s.first}, {"second", s.second},
                {"length", s.length}};
  }
  Json operator()(const CylinderSpec& s) const {
    return Json{{"type", "cylinder_collision"}, {"quadrotor", s.quadrotor},
                {"human", s.human}, {"radius", s.radius}, {"height", s.height}};
  }
  Json operator()(const ScriptedCylinderSpec& s) const {
    Json wps = Json::array();
    for (const auto& w : s.waypoints) wps.push_back(Json::array({w.t, w.x, w.y}));
    return Json{{"type", "scripted_cylinder"}, {"quadrotor", s.quadrotor},
                {"waypoints", wps}, {"center_height", s.center_height},
                {"radius", s.radius}, {"height", s.height}};
  }
};

}  // namespace

Mat Weight::matrix() const {
  if (diagonal) return Mat(value.col(0).asDiagonal());
  return value;
}

int Scenario::horizon_steps() const {
  if (!(step_size > 0.0)) return 0;
  return static_cast<int>(std::lround(horizon_seconds / step_size));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json parse_json(const std::string& content, const std::string& source) {
  try {
    return Json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line/column.
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, content.size());
    for (std::size_t i = 0; i + 1 < end; ++i) {
      if (content[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << (source.empty() ? "input" : source) << ": parse error at line "
        << line << ", column " << column << ": " << e.what();
    throw InputError(msg.str());
  }
}

Scenario parse_scenario(const std::string& content, const std::string& source) {
  const Json j = parse_json(content, source);
  check_keys(j, "", {"name", "description", "step_size", "horizon_seconds",
                     "seed", "agents", "constraints", "solver", "mpc", "notes"});
  Scenario s;
  s.name = text(required(j, "", "name"), "/name");
  if (j.contains("description")) s.description = text(j["description"], "/description");
  if (j.contains("notes")) s.notes = text(j["notes"], "/notes");
  s.step_size = number(required(j, "", "step_size"), "/step_size");
  s.horizon_seconds = number(required(j, "", "horizon_seconds"), "/horizon_seconds");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("/seed", "expected a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  const auto& agents = required(j, "", "agents");
  if (!agents.is_array()) fail("/agents", "expected an array");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string p = "/agents/" + std::to_string(i);
    const auto& a = agents[i];
    check_keys(a, p, {"name", "model", "initial_state", "goal", "Q", "C", "Qf",
                      "A", "B"});
    AgentEntry e;
    e.name = a.contains("name") ? text(a["name"], p + "/name")
                                : "agent" + std::to_string(i);
    e.model = text(required(a, p, "model"), p + "/model");
    e.initial_state = vector(required(a, p, "initial_state"), p + "/initial_state");
    e.goal = vector(required(a, p, "goal"), p + "/goal");
    e.Q = weight(required(a, p, "Q"), p + "/Q");
    e.C = weight(required(a, p, "C"), p + "/C");
    e.Qf = weight(required(a, p, "Qf"), p + "/Qf");
    if (a.contains("A")) e.A = matrix(a["A"], p + "/A");
    if (a.contains("B")) e.B = matrix(a["B"], p + "/B");
    s.agents.push_back(std::move(e));
  }
  if (j.contains("constraints")) {
    const auto& cs = j["constraints"];
    if (!cs.is_array()) fail("/constraints", "expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      s.constraints.push_back(
          parse_constraint(cs[i], "/constraints/" + std::to_string(i)));
    }
  }
  if (j.contains("solver")) {
    const auto& so = j["solver"];
    if (!so.is_object()) fail("/solver", "expected an object");
    SolverOptions probe;
    for (const auto& [key, value] : so.items()) {
      const std::string p = "/solver/" + key;
      if (!value.is_number() && !value.is_boolean()) {
        fail(p, "expected a number or boolean");
      }
      try {
        set_option(probe, key, value.dump());
      } catch (const InputError& e) {
        fail(p, e.what());
      }
      s.solver[key] = value;
    }
  }
  if (j.contains("mpc")) {
    const auto& m = j["mpc"];
    check_keys(m, "/mpc", {"horizon_seconds", "total_steps", "warm_start",
                           "replan_every"});
    MpcEntry e;
    if (m.contains("horizon_seconds")) {
      e.horizon_seconds = number(m["horizon_seconds"], "/mpc/horizon_seconds");
    }
    e.total_steps = integer(required(m, "/mpc", "total_steps"), "/mpc/total_steps");
    if (m.contains("warm_start")) {
      e.warm_start = text(m["warm_start"], "/mpc/warm_start");
      if (e.warm_start != "shift" && e.warm_start != "zero") {
        fail("/mpc/warm_start", "expected \"shift\" or \"zero\"");
      }
    }
    if (m.contains("replan_every")) {
      e.replan_every = integer(m["replan_every"], "/mpc/replan_every");
    }
    s.mpc = e;
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  return parse_scenario(read_file(path), path);
}

Json to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["step_size"] = s.step_size;
  j["horizon_seconds"] = s.horizon_seconds;
  j["seed"] = s.seed;
  Json agents = Json::array();
  for (const auto& a : s.agents) {
    Json e;
    e["name"] = a.name;
    e["model"] = a.model;
    e["initial_state"] = to_json(a.initial_state);
    e["goal"] = to_json(a.goal);
    e["Q"] = to_json(a.Q);
    e["C"] = to_json(a.C);
    e["Qf"] = to_json(a.Qf);
    if (a.A) e["A"] = to_json(*a.A);
    if (a.B) e["B"] = to_json(*a.B);
    agents.push_back(std::move(e));
  }
  j["agents"] = std::move(agents);
  Json cs = Json::array();
  for (const auto& c : s.constraints) cs.push_back(std::visit(ConstraintWriter{}, c));
  j["constraints"] = std::move(cs);
  if (!s.solver.empty()) {
    Json so = Json::object();
    for (const auto& [k, v] : s.solver) so[k] = v;
    j["solver"] = std::move(so);
  }
  if (s.mpc) {
    j["mpc"] = Json{{"horizon_seconds", s.mpc->horizon_seconds},
                    {"total_steps", s.mpc->total_steps},
                    {"warm_start", s.mpc->warm_start},
                    {"replan_every", s.mpc->replan_every}};
  }
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

std::string dump_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string scenario_hash(const Scenario& s) { return fnv1a_hex(to_json(s).dump()); }

GameSpec build_game(const Scenario& s) {
  GameSpec spec;
  spec.step_size = s.step_size;
  spec.horizon = s.horizon_steps();
  if (s.step_size > 0.0 &&
      std::abs(s.horizon_seconds / s.step_size - spec.horizon) > 1e-9) {
    fail("/horizon_seconds", "must be a whole number of steps");
  }
  std::vector<AgentModelPtr> models;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    const std::string p = "/agents/" + std::to_string(i);
    AgentModelPtr model;
    if (a.model == "linear") {
      if (!a.A || !a.B) fail(p, "linear model needs A and B");
      if (a.A->rows() != a.A->cols() || a.B->rows() != a.A->rows()) {
        fail(p, "linear model: A must be n x n and B n x m");
      }
      model = std::make_shared<LinearModel>(*a.A, *a.B);
    } else {
      try {
        model = make_model(a.model);
      } catch (const InputError& e) {
        fail(p + "/model", e.what());
      }
    }
    models.push_back(model);
  }
  const auto layout = BlockLayout::from_models(models);
  spec.initial_state = Vec::Zero(layout.n);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    const std::string p = "/agents/" + std::to_string(i);
    const int n = layout.state_dim[i], m = layout.control_dim[i];
    auto check = [&](const std::string& field, Eigen::Index got, int want) {
      if (got != want) {
        fail(p + "/" + field, "expected size " + std::to_string(want) + ", got " +
                                  std::to_string(got));
      }
    };
    check("initial_state", a.initial_state.size(), n);
    check("goal", a.goal.size(), n);
    const Mat Q = a.Q.matrix(), C = a.C.matrix(), Qf = a.Qf.matrix();
    check("Q", Q.rows(), n);
    check("Q", Q.cols(), n);
    check("C", C.rows(), m);
    check("C", C.cols(), m);
    check("Qf", Qf.rows(), n);
    check("Qf", Qf.cols(), n);
    spec.initial_state.segment(layout.state_offset[i], n) = a.initial_state;
    QuadraticCostParams params;
    params.state_offset = layout.state_offset[i];
    params.control_offset = layout.control_offset[i];
    params.Q = Q;
    params.C = C;
    params.Qf = Qf;
    params.goal = a.goal;
    spec.agents.push_back({a.name, models[i], AgentCost::quadratic(params)});
  }
  spec.constraints = build_constraints(s.constraints, models, s.step_size);
  return spec;
}

SolverOptions solver_options(const Scenario& s) {
  SolverOptions opts;
  for (const auto& [k, v] : s.solver) set_option(opts, k, v.dump());
  return opts;
}

MPCConfig mpc_config(const Scenario& s) {
  MPCConfig cfg;
  cfg.step_size = s.step_size;
  cfg.solver = solver_options(s);
  if (s.mpc) {
    cfg.horizon_seconds = s.mpc->horizon_seconds;
    cfg.total_steps = s.mpc->total_steps;
    cfg.warm_start = s.mpc->warm_start == "zero" ? WarmStart::Zero : WarmStart::Shift;
    cfg.replan_every = s.mpc->replan_every;
  } else {
    cfg.total_steps = 0;
  }
  return cfg;
}

void apply_overrides(SolverOptions& opts, const std::vector<std::string>& kv) {
  for (const auto& item : kv) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InputError("option override '" + item + "' is not key=value");
    }
    set_option(opts, item.substr(0, eq), item.substr(eq + 1));
  }
}

}  // namespace dpgame::app
