#include "bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

namespace dpgame::app {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError("benchmark config " + path + ": " + what);
}

double number(const Json& v, const std::string& path) {
  if (!v.is_number() || !std::isfinite(v.get<double>())) fail(path, "expected a finite number");
  return v.get<double>();
}

}  // namespace

void BenchmarkConfig::validate() const {
  if (trials < 1) fail("/trials", "must be >= 1");
  if (!(position_box > 0.0)) fail("/randomization/position_box", "must be > 0");
  if (!(heading_max > heading_min)) fail("/randomization/heading_range", "must be non-empty");
  if (histogram_bins < 1) fail("/histogram_bins", "must be >= 1");
  if (!(min_converged_fraction >= 0.0 && min_converged_fraction <= 1.0)) {
    fail("/min_converged_fraction", "must be in [0, 1]");
  }
}

BenchmarkConfig parse_benchmark(const std::string& content, const std::string& source) {
  const Json j = parse_json(content, source);
  if (!j.is_object()) fail("", "expected an object");
  const std::set<std::string> allowed{"name", "scenario", "trials", "seed",
                                      "randomization", "histogram_bins",
                                      "certify", "min_converged_fraction"};
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail("/" + k, "unknown field '" + k + "'");
  }
  BenchmarkConfig c;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail("/name", "expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (!j.contains("scenario") || !j["scenario"].is_string()) {
    fail("/scenario", "expected a scenario path");
  }
  c.scenario = j["scenario"].get<std::string>();
  if (j.contains("trials")) {
    if (!j["trials"].is_number_integer()) fail("/trials", "expected an integer");
    c.trials = j["trials"].get<int>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("/seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("randomization")) {
    const auto& r = j["randomization"];
    if (!r.is_object()) fail("/randomization", "expected an object");
    for (const auto& [k, v] : r.items()) {
      if (k == "position_box") {
        c.position_box = number(v, "/randomization/position_box");
      } else if (k == "heading_range") {
        if (!v.is_array() || v.size() != 2) fail("/randomization/heading_range", "expected [min, max]");
        c.heading_min = number(v[0], "/randomization/heading_range/0");
        c.heading_max = number(v[1], "/randomization/heading_range/1");
      } else {
        fail("/randomization/" + k, "unknown field '" + k + "'");
      }
    }
  }
  if (j.contains("histogram_bins")) {
    if (!j["histogram_bins"].is_number_integer()) fail("/histogram_bins", "expected an integer");
    c.histogram_bins = j["histogram_bins"].get<int>();
  }
  if (j.contains("certify")) {
    if (!j["certify"].is_boolean()) fail("/certify", "expected a boolean");
    c.certify = j["certify"].get<bool>();
  }
  if (j.contains("min_converged_fraction")) {
    c.min_converged_fraction = number(j["min_converged_fraction"], "/min_converged_fraction");
  }
  c.validate();
  return c;
}

Json to_json(const BenchmarkConfig& c) {
  return Json{{"name", c.name},
              {"scenario", c.scenario},
              {"trials", c.trials},
              {"seed", c.seed},
              {"randomization", Json{{"position_box", c.position_box},
                                     {"heading_range", Json::array({c.heading_min, c.heading_max})}}},
              {"histogram_bins", c.histogram_bins},
              {"certify", c.certify},
              {"min_converged_fraction", c.min_converged_fraction}};
}

BenchmarkConfig load_benchmark(const std::string& path) {
  BenchmarkConfig c = parse_benchmark(read_file(path), path);
  const std::filesystem::path p(c.scenario);
  if (p.is_relative()) {
    c.scenario = (std::filesystem::path(path).parent_path() / p).lexically_normal().string();
  }
  return c;
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(trial)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::uint64_t TrialRng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double TrialRng::uniform(double lo, double hi) {
  const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Vec randomize_initial_state(const GameSpec& spec, const BenchmarkConfig& c,
                            std::uint64_t seed) {
  TrialRng rng(seed);
  Vec x = spec.initial_state;
  const auto layout = spec.layout();
  for (int i = 0; i < spec.num_agents(); ++i) {
    const auto& model = spec.agents[i].model;
    const int off = layout.state_offset[i];
    for (int p : model->position_indices()) {
      x[off + p] += rng.uniform(-c.position_box, c.position_box);
    }
    if (const auto h = model->heading_index()) {
      x[off + *h] = rng.uniform(c.heading_min, c.heading_max);
    }
  }
  return x;
}

Histogram histogram(const std::vector<double>& values, int bins) {
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) {
    h.edges.assign(bins + 1, 0.0);
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + b * width);
  h.edges.back() = hi;
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    h.counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  return h;
}

TimingStats timing_stats(std::vector<double> values) {
  TimingStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  s.min = values.front();
  s.max = values.back();
  return s;
}

}  // namespace dpgame::app
