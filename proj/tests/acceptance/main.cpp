// Acceptance suite: one PASS/FAIL line per criterion.
//
//   dpgame_acceptance <path to dpgame binary> <scenarios dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "app/bench.hpp"
#include "app/commands.hpp"
#include "derivative_checks.hpp"
#include "dpgame/mpc.hpp"
#include "dpgame/nash.hpp"
#include "dpgame/potential.hpp"
#include "dpgame/solver.hpp"
#include "fixtures.hpp"
#include "app/output.hpp"
#include "riccati_oracle.hpp"
#include "app/scenario.hpp"

namespace fs = std::filesystem;
using namespace dpgame;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_scenarios;
fs::path g_binary;
fs::path g_work;

std::string scenario(const std::string& file) { return (g_scenarios / file).string(); }

// --- 1 ---------------------------------------------------------------------

Outcome riccati_equivalence() {
  struct Shape {
    int agents, n, m, horizon;
  };
  const Shape shapes[] = {{2, 2, 1, 10}, {3, 2, 1, 20}, {4, 3, 2, 50}, {2, 3, 2, 35},
                          {4, 2, 2, 50}, {3, 3, 1, 25}, {2, 2, 2, 40}, {3, 4, 2, 15},
                          {2, 6, 3, 50}, {4, 3, 1, 30}};
  double worst = 0.0;
  int failures = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 20; ++i) {
    const Shape s = shapes[i % 10];
    const auto game = testing::random_lq_game(s.agents, s.n, s.m, s.horizon, 1000 + i);
    const auto ref = testing::riccati_solve(game.joint);
    const SolveResult r = solve(PotentialOCP(game.spec), SolverOptions{});
    if (!r.converged) ++failures;
    for (int k = 0; k < s.horizon; ++k) {
      worst = std::max(worst, (r.trajectory.controls[k] - ref.controls[k]).lpNorm<Eigen::Infinity>());
    }
  }
  const double elapsed = seconds_since(t0);
  return {failures == 0 && worst <= 1e-8 && elapsed < 1.0,
          "20 instances, max |du| = " + fmt("%.2e", worst) + ", " + fmt("%.3f", elapsed) + " s"};
}

// --- 2 ---------------------------------------------------------------------

Outcome potential_identity() {
  const GameSpec spec = app::build_game(app::load_scenario(scenario("four_agent_exchange.json")));
  const ConditionReport r = verify_potential_condition(spec, assemble(spec), 1000, 2024);
  return {r.passed && r.trials == 1000 && r.max_residual <= 1e-9,
          std::to_string(r.trials) + " trials, " + std::to_string(r.failures) +
              " failures, max residual " + fmt("%.2e", r.max_residual)};
}

// --- 3 and 4 -----------------------------------------------------------------

Outcome four_agent_exchange() {
  const app::Scenario s = app::load_scenario(scenario("four_agent_exchange.json"));
  const GameSpec spec = app::build_game(s);
  const auto t0 = Clock::now();
  const SolveResult r = solve(assemble(spec), app::solver_options(s));
  const double elapsed = seconds_since(t0);

  const BlockLayout L = spec.layout();
  double min_dist = INFINITY, goal_err = 0.0;
  for (const Vec& x : r.trajectory.states) {
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        const double d = (x.segment(L.state_offset[i], 2) - x.segment(L.state_offset[j], 2)).norm();
        min_dist = std::min(min_dist, d);
      }
    }
  }
  for (int i = 0; i < 4; ++i) {
    const Vec p = r.trajectory.states.back().segment(L.state_offset[i], 2);
    goal_err = std::max(goal_err, (p - s.agents[i].goal.head(2)).norm());
  }
  return {r.converged && min_dist >= 0.3 - 1e-4 && goal_err <= 0.1 && elapsed < 5.0,
          std::string(r.converged ? "converged" : "NOT converged") + ", min distance " +
              fmt("%.5f", min_dist) + " m, max goal error " + fmt("%.4f", goal_err) + " m, " +
              fmt("%.3f", elapsed) + " s"};
}

app::Json run_benchmark() {
  app::BenchArgs args;
  args.config = scenario("bench_four_agent.json");
  args.out = (g_work / "bench.json").string();
  std::ostringstream log, err;
  const int code = app::run_bench(args, log, err);
  if (code == app::kExitInput) throw std::runtime_error("bench failed: " + err.str());
  return app::parse_json(app::read_file(args.out), args.out);
}

Outcome benchmark_convergence(const app::Json& bench) {
  const auto& sum = bench.at("summary");
  const int trials = sum.at("trials").get<int>();
  const int converged = sum.at("converged").get<int>();
  const auto& hist = bench.at("timing").at("histogram");
  int binned = 0;
  for (const auto& c : hist.at("counts")) binned += c.get<int>();
  std::ostringstream counts;
  counts << hist.at("counts").dump();
  const double frac = trials > 0 ? static_cast<double>(converged) / trials : 0.0;
  const auto& t = bench.at("timing");
  return {trials == 200 && frac >= 0.95 && binned == trials,
          std::to_string(converged) + "/" + std::to_string(trials) + " converged; solve ms mean " +
              fmt("%.1f", t.at("mean_ms").get<double>()) + ", median " +
              fmt("%.1f", t.at("median_ms").get<double>()) + "; histogram " + counts.str()};
}

Outcome benchmark_certificates(const app::Json& bench) {
  int converged = 0, bad = 0;
  double worst_stat = 0.0, worst_gap = 0.0;
  for (const auto& t : bench.at("trials")) {
    if (!t.at("converged").get<bool>()) continue;
    ++converged;
    const double stat = t.at("max_stationarity").get<double>();
    const double gap = t.at("max_relative_gap").get<double>();
    worst_stat = std::max(worst_stat, stat);
    worst_gap = std::max(worst_gap, gap);
    if (!t.at("certified").get<bool>() || stat > 1e-3 || gap > 1e-3) ++bad;
  }
  return {converged > 0 && bad == 0,
          std::to_string(converged - bad) + "/" + std::to_string(converged) +
              " converged trials certified, max KKT residual " + fmt("%.2e", worst_stat) +
              ", max relative gap " + fmt("%.2e", worst_gap)};
}

// --- 5 ---------------------------------------------------------------------

// Grid argmin of the potential over feasible profiles, by direct
// enumeration.
ControlSequence potential_grid_argmin(const GameSpec& spec, const std::vector<std::vector<double>>& grids) {
  const int T = spec.horizon;
  const int g0 = static_cast<int>(grids[0].size()), g1 = static_cast<int>(grids[1].size());
  long long total = 1;
  for (int k = 0; k < T; ++k) total *= static_cast<long long>(g0) * g1;
  ControlSequence best;
  double best_value = INFINITY;
  for (long long code = 0; code < total; ++code) {
    ControlSequence u(T, Vec::Zero(2));
    long long c = code;
    for (int k = 0; k < T; ++k) {
      u[k][0] = grids[0][c % g0];
      c /= g0;
      u[k][1] = grids[1][c % g1];
      c /= g1;
    }
    const Trajectory t = rollout(spec, spec.initial_state, u);
    if (max_violation(spec, t) > 0.0) continue;
    const double value = agent_cost(spec, 0, t.states, u) + agent_cost(spec, 1, t.states, u);
    if (value < best_value) {
      best_value = value;
      best = u;
    }
  }
  return best;
}

Outcome brute_force() {
  const auto g = testing::brute_force_instance();
  const auto t0 = Clock::now();
  const BruteForceResult r = brute_force_nash(g.spec, g.grids);
  const double elapsed = seconds_since(t0);
  const ControlSequence argmin = potential_grid_argmin(g.spec, g.grids);
  bool contained = false;
  for (const auto& e : r.equilibria) {
    bool same = !argmin.empty();
    for (std::size_t k = 0; same && k < e.controls.size(); ++k) {
      same = (e.controls[k] - argmin[k]).lpNorm<Eigen::Infinity>() == 0.0;
    }
    contained = contained || same;
  }
  return {contained && elapsed < 10.0,
          std::to_string(r.profiles) + " profiles, " + std::to_string(r.equilibria.size()) +
              " equilibria, potential argmin " + (contained ? "contained" : "NOT contained") + ", " +
              fmt("%.3f", elapsed) + " s"};
}

// --- 6 ---------------------------------------------------------------------

Outcome rod_carry() {
  const app::Scenario s = app::load_scenario(scenario("rod_carry.json"));
  const GameSpec spec = app::build_game(s);
  const MPCConfig cfg = app::mpc_config(s);
  const ClosedLoopLog log = run_mpc(spec, cfg);
  const BlockLayout L = spec.layout();
  const double tol = cfg.solver.constraint_tolerance;
  const double radius = std::sqrt(0.4), half_height = 1.0;

  double rod = 0.0, clearance = INFINITY, quad_speed = 0.0, human_speed = 0.0;
  for (const Vec& x : log.states) {
    const Vec p0 = x.segment(L.state_offset[0], 3), p1 = x.segment(L.state_offset[1], 3);
    rod = std::max(rod, std::abs((p0 - p1).norm() - 0.5));
    for (int q = 0; q < 2; ++q) {
      const Vec p = x.segment(L.state_offset[q], 3);
      for (int h = 2; h < 4; ++h) {
        const Vec c = x.segment(L.state_offset[h], 3);  // px, py, r
        if (std::abs(p[2] - c[2]) > half_height) continue;
        clearance = std::min(clearance, (p.head(2) - c.head(2)).norm() - radius);
      }
    }
  }
  for (const Vec& u : log.controls) {
    for (int q = 0; q < 2; ++q) quad_speed = std::max(quad_speed, u.segment(L.control_offset[q], 3).norm());
    for (int h = 2; h < 4; ++h) human_speed = std::max(human_speed, std::abs(u[L.control_offset[h]]));
  }
  const bool full = log.ok() && static_cast<int>(log.controls.size()) == cfg.total_steps;
  return {full && rod <= 1e-2 && clearance >= -tol && quad_speed <= 1.2 + tol && human_speed <= 1.5 + tol,
          std::to_string(log.controls.size()) + " steps" + (log.ok() ? "" : " (FAILED: " + log.failure->reason + ")") +
              ", rod error " + fmt("%.2e", rod) + " m, cylinder clearance " + fmt("%.2e", clearance) +
              " m, quad speed " + fmt("%.4f", quad_speed) + ", human speed " + fmt("%.4f", human_speed)};
}

// --- 7 ---------------------------------------------------------------------

Outcome derivatives() {
  const auto checks = testing::run_derivative_checks(1000, 7);
  double worst = 0.0;
  std::string worst_name;
  bool ok = !checks.empty();
  for (const auto& c : checks) {
    ok = ok && c.points >= 1000 && c.max_error <= 1e-6;
    if (c.max_error >= worst) {
      worst = c.max_error;
      worst_name = c.name;
    }
  }
  return {ok, std::to_string(checks.size()) + " functions x 1000 points, worst " + fmt("%.2e", worst) +
                  " (" + worst_name + ")"};
}

// --- 8 ---------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + g_binary.string() + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  struct Command {
    std::string name, args, output;
    bool json;
  };
  std::vector<std::string> mismatched;
  int runs = 0;
  for (int rep = 0; rep < 2; ++rep) {
    const std::string d = (g_work / ("run" + std::to_string(rep))).string();
    fs::create_directories(d);
    const std::vector<Command> cmds = {
        {"solve", "solve --scenario " + scenario("four_agent_exchange.json") + " --seed 5 --out " + d + "/solve.json",
         "solve.json", true},
        {"bench", "bench --config " + scenario("bench_four_agent.json") + " --seed 5 --trials 4 --out " + d + "/bench.json",
         "bench.json", true},
        {"mpc", "mpc --scenario " + scenario("rod_carry.json") + " --seed 5 --steps 10 --out " + d + "/mpc.json",
         "mpc.json", true},
        {"verify", "verify --in " + d + "/solve.json --out " + d + "/verify.json", "verify.json", true},
        {"export", "export --in " + d + "/mpc.json --out " + d + "/mpc.csv", "mpc.csv", false},
    };
    for (const auto& c : cmds) {
      const int code = run_cli(c.args);
      ++runs;
      if (code != 0) mismatched.push_back(c.name + " exit " + std::to_string(code));
    }
    if (rep == 1) {
      const std::string a = (g_work / "run0").string(), b = d;
      for (const auto& c : cmds) {
        const std::string ta = app::read_file(a + "/" + c.output), tb = app::read_file(b + "/" + c.output);
        const bool same = c.json ? app::strip_timing(app::parse_json(ta, c.output)).dump() ==
                                       app::strip_timing(app::parse_json(tb, c.output)).dump()
                                 : ta == tb;
        if (!same) mismatched.push_back(c.name + " differs");
      }
    }
  }
  std::string detail = std::to_string(runs) + " CLI runs (solve, bench, mpc, verify, export twice)";
  for (const auto& m : mismatched) detail += "; " + m;
  return {mismatched.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: " << argv[0] << " <dpgame binary> <scenarios dir>\n";
    return 2;
  }
  g_binary = fs::absolute(argv[1]);
  g_scenarios = fs::absolute(argv[2]);
  g_work = fs::temp_directory_path() / ("dpgame_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << o.detail << std::endl;
  };

  report(1, "Riccati oracle equivalence", riccati_equivalence);
  report(2, "potential identity", potential_identity);

  app::Json bench;
  std::string bench_error;
  try {
    bench = run_benchmark();
  } catch (const std::exception& e) {
    bench_error = e.what();
  }
  report(3, "four-agent exchange", [&] {
    Outcome a = four_agent_exchange();
    if (!bench_error.empty()) return Outcome{false, a.detail + "; benchmark error: " + bench_error};
    const Outcome b = benchmark_convergence(bench);
    return Outcome{a.pass && b.pass, a.detail + "; benchmark " + b.detail};
  });
  report(4, "Nash certification", [&] {
    if (!bench_error.empty()) return Outcome{false, "benchmark error: " + bench_error};
    return benchmark_certificates(bench);
  });
  report(5, "brute-force oracle", brute_force);
  report(6, "rod-carry receding horizon", rod_carry);
  report(7, "derivative checks", derivatives);
  report(8, "CLI determinism", determinism);

  fs::remove_all(g_work);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
