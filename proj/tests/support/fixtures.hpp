#pragma once

#include <string>

#include "dpgame/game.hpp"

namespace dpgame::testing {

// Path of a shipped scenario file.
std::string scenario_path(const std::string& file);

// Game built from a shipped scenario file.
GameSpec shipped_game(const std::string& file);

// Agent with a quadratic cost on its own blocks at the given offsets.
Agent quadratic_agent(const std::string& name, AgentModelPtr model, int state_offset,
                      int control_offset, const Vec& goal, double q, double c, double qf);

// N one-dimensional integrators (x+ = x + h u) with quadratic costs,
// initial states `x0` and goals `goals`.
GameSpec integrator_game(const std::vector<double>& x0, const std::vector<double>& goals,
                         int horizon, double h = 0.1);

// Two 1-D integrators (h = 1, T = 2) swapping places at x = -1 and 1 while
// keeping |x0 - x1| >= 0.5, with the shared 11-point control grid on [-1, 1].
struct GridGame {
  GameSpec spec;
  std::vector<std::vector<double>> grids;
};
GridGame brute_force_instance();

}  // namespace dpgame::testing
