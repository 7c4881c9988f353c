#include <iostream>

#include "CLI11.hpp"

#include "app/commands.hpp"

using namespace dpgame::app;

int main(int argc, char** argv) {
  CLI::App app{"Potential-game trajectory solver"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a scenario and certify the result");
  solve_cmd->add_option("--scenario", solve.scenario, "Scenario file")->required();
  solve_cmd->add_option("--out", solve.out, "Output file")->required();
  solve_cmd->add_option("--seed", solve.seed, "Override the scenario seed");
  solve_cmd->add_option("--opts", solve.opts, "Solver option overrides (key=value)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run randomized benchmark trials");
  bench_cmd->add_option("--config,--scenario", bench.config, "Benchmark config file")->required();
  bench_cmd->add_option("--out", bench.out, "Output file")->required();
  bench_cmd->add_option("--seed", bench.seed, "Override the master seed");
  bench_cmd->add_option("--trials", bench.trials, "Override the trial count");
  bench_cmd->add_option("--opts", bench.opts, "Solver option overrides (key=value)");

  MpcArgs mpc;
  auto* mpc_cmd = app.add_subcommand("mpc", "Run a receding-horizon simulation");
  mpc_cmd->add_option("--scenario", mpc.scenario, "Scenario file")->required();
  mpc_cmd->add_option("--out", mpc.out, "Output file")->required();
  mpc_cmd->add_option("--seed", mpc.seed, "Override the scenario seed");
  mpc_cmd->add_option("--steps", mpc.steps, "Override the number of closed-loop steps");
  mpc_cmd->add_option("--warm-start", mpc.warm_start, "shift or zero");
  mpc_cmd->add_option("--opts", mpc.opts, "Solver option overrides (key=value)");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Re-certify a stored solve result");
  verify_cmd->add_option("--in", verify.input, "Output of `solve`")->required();
  verify_cmd->add_option("--out", verify.out, "Certificate file")->required();
  verify_cmd->add_option("--opts", verify.opts, "Solver option overrides (key=value)");

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export", "Write plot data as CSV");
  export_cmd->add_option("--in", exp.input, "Output of solve, mpc or bench")->required();
  export_cmd->add_option("--out", exp.out, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (*solve_cmd) return run_solve(solve, std::cout, std::cerr);
  if (*bench_cmd) return run_bench(bench, std::cout, std::cerr);
  if (*mpc_cmd) return run_mpc(mpc, std::cout, std::cerr);
  if (*verify_cmd) return run_verify(verify, std::cout, std::cerr);
  return run_export(exp, std::cout, std::cerr);
}
