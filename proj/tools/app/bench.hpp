#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenario.hpp"

namespace dpgame::app {

struct BenchmarkConfig {
  std::string name;
  std::string scenario;  // path, relative to the config file
  int trials = 200;
  std::uint64_t seed = 1;
  double position_box = 0.5;  // half-width around each initial position
  double heading_min = -3.141592653589793;
  double heading_max = 3.141592653589793;  // exclusive
  int histogram_bins = 20;
  bool certify = true;
  double min_converged_fraction = 0.95;

  void validate() const;
};

BenchmarkConfig parse_benchmark(const std::string& text,
                                const std::string& source = "");
Json to_json(const BenchmarkConfig& c);

// Config with `scenario` resolved against the config file's directory.
BenchmarkConfig load_benchmark(const std::string& path);

// 64-bit seed of trial `trial`, derived from the master seed.
std::uint64_t trial_seed(std::uint64_t master, int trial);

// Uniform draws from a splitmix-style engine; bit-exact on every platform.
class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform(double lo, double hi);  // [lo, hi)

 private:
  std::uint64_t state_;
};

// Perturbed initial state for one trial: every position entry moves by
// U[-box, box), every heading is redrawn from [heading_min, heading_max).
Vec randomize_initial_state(const GameSpec& spec, const BenchmarkConfig& c,
                            std::uint64_t seed);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<int> counts;
};

Histogram histogram(const std::vector<double>& values, int bins);

struct TimingStats {
  double mean = 0.0, std = 0.0, median = 0.0, min = 0.0, max = 0.0;
};

TimingStats timing_stats(std::vector<double> values);

}  // namespace dpgame::app
