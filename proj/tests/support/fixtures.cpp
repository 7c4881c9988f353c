#include "fixtures.hpp"

#include "app/scenario.hpp"

namespace dpgame::testing {

std::string scenario_path(const std::string& file) {
  return std::string(DPGAME_SCENARIO_DIR) + "/" + file;
}

GameSpec shipped_game(const std::string& file) {
  return app::build_game(app::load_scenario(scenario_path(file)));
}

Agent quadratic_agent(const std::string& name, AgentModelPtr model, int state_offset,
                      int control_offset, const Vec& goal, double q, double c, double qf) {
  const int n = model->state_dim(), m = model->control_dim();
  QuadraticCostParams p;
  p.state_offset = state_offset;
  p.control_offset = control_offset;
  p.Q = q * Mat::Identity(n, n);
  p.C = c * Mat::Identity(m, m);
  p.Qf = qf * Mat::Identity(n, n);
  p.goal = goal;
  return {name, std::move(model), AgentCost::quadratic(p)};
}

GameSpec integrator_game(const std::vector<double>& x0, const std::vector<double>& goals,
                         int horizon, double h) {
  GameSpec spec;
  spec.step_size = h;
  spec.horizon = horizon;
  const int N = static_cast<int>(x0.size());
  spec.initial_state = Vec::Map(x0.data(), N);
  for (int i = 0; i < N; ++i) {
    spec.agents.push_back(quadratic_agent("agent" + std::to_string(i), make_model("integrator1"),
                                          i, i, Vec::Constant(1, goals[i]), 1.0, 1.0, 1.0));
  }
  return spec;
}

GridGame brute_force_instance() {
  GridGame g;
  g.spec = integrator_game({-1.0, 1.0}, {1.0, -1.0}, 2, 1.0);
  g.spec.constraints =
      build_constraints({PairwiseCollisionSpec{{}, 0.5}}, g.spec.models(), 1.0);
  std::vector<double> grid;
  for (int j = 0; j <= 10; ++j) grid.push_back(-1.0 + 0.2 * j);
  g.grids = {grid, grid};
  return g;
}

}  // namespace dpgame::testing
