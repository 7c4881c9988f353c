#pragma once

#include <string>

#include "dpgame/mpc.hpp"
#include "dpgame/nash.hpp"
#include "dpgame/solver.hpp"
#include "scenario.hpp"

namespace dpgame::app {

Json to_json(const Vec& v);
Json to_json(const std::vector<Vec>& seq);
Vec vec_from_json(const Json& j);
std::vector<Vec> seq_from_json(const Json& j);

Json options_json(const SolverOptions& opts);
Json layout_json(const GameSpec& spec);
Json trajectory_json(const Trajectory& traj);
Json multipliers_json(const MultiplierState& m);
MultiplierState multipliers_from_json(const Json& j);
Json certificate_json(const NashCertificate& cert);

// Solver result without timing; `solve_ms` goes under the caller's
// "timing" block.
Json solve_result_json(const SolveResult& r);
// Rebuilds the parts of a SolveResult the verifier needs.
SolveResult solve_result_from_json(const Json& j);

// The worst constraint rows of a trajectory (step, row, type, value).
Json violation_report(const GameSpec& spec, const Trajectory& traj,
                      int count = 5);

Json mpc_config_json(const MPCConfig& cfg);
Json mpc_log_json(const ClosedLoopLog& log);

// Drops every member named "timing", recursively. Used for determinism
// comparisons.
Json strip_timing(const Json& j);

void write_text(const std::string& path, const std::string& content);
void write_json(const std::string& path, const Json& j);

}  // namespace dpgame::app
