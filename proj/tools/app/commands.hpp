#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpgame::app {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // solver or verification failure
inline constexpr int kExitInput = 2;    // unreadable or invalid input

struct SolveArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> opts;
};

struct BenchArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::vector<std::string> opts;
};

struct MpcArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::string> warm_start;
  std::vector<std::string> opts;
};

struct VerifyArgs {
  std::string input;  // output of `solve`
  std::string out;
  std::vector<std::string> opts;
};

struct ExportArgs {
  std::string input;  // output of `solve`, `mpc` or `bench`
  std::string out;    // CSV
};

// Each writes its output file and a one-line summary to `log`; errors go
// to `err`.
int run_solve(const SolveArgs& args, std::ostream& log, std::ostream& err);
int run_bench(const BenchArgs& args, std::ostream& log, std::ostream& err);
int run_mpc(const MpcArgs& args, std::ostream& log, std::ostream& err);
int run_verify(const VerifyArgs& args, std::ostream& log, std::ostream& err);
int run_export(const ExportArgs& args, std::ostream& log, std::ostream& err);

}  // namespace dpgame::app
