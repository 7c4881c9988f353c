#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpgame/game.hpp"
#include "dpgame/mpc.hpp"
#include "dpgame/solver.hpp"

namespace dpgame::app {

using Json = nlohmann::ordered_json;

// Cost weight given either as a diagonal (flat list) or a full matrix.
struct Weight {
  bool diagonal = true;
  Mat value;  // n x 1 when diagonal

  Mat matrix() const;
};

struct AgentEntry {
  std::string name;
  std::string model;
  Vec initial_state;
  Vec goal;
  Weight Q, C, Qf;
  std::optional<Mat> A, B;  // "linear" model only
};

struct MpcEntry {
  double horizon_seconds = 0.5;
  int total_steps = 0;
  std::string warm_start = "shift";
  int replan_every = 1;
};

struct Scenario {
  std::string name;
  std::string description;
  double step_size = 0.1;
  double horizon_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<AgentEntry> agents;
  std::vector<ConstraintDescriptor> constraints;
  std::map<std::string, Json> solver;  // overrides by option name
  std::optional<MpcEntry> mpc;
  std::string notes;

  int horizon_steps() const;
};

// Parse errors carry "line L, column C"; schema errors name the JSON path.
Scenario parse_scenario(const std::string& text, const std::string& source = "");
Scenario load_scenario(const std::string& path);

Json to_json(const Scenario& s);
std::string dump_scenario(const Scenario& s);

// FNV-1a (64 bit) of the canonical dump, as 16 hex digits.
std::string scenario_hash(const Scenario& s);
std::string fnv1a_hex(const std::string& bytes);

GameSpec build_game(const Scenario& s);
SolverOptions solver_options(const Scenario& s);
MPCConfig mpc_config(const Scenario& s);

// Applies "key=value" overrides in order.
void apply_overrides(SolverOptions& opts, const std::vector<std::string>& kv);

// Parses JSON text, turning nlohmann parse errors into InputError with the
// line and column of the failure.
Json parse_json(const std::string& text, const std::string& source);
std::string read_file(const std::string& path);

}  // namespace dpgame::app
