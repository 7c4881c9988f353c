#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "bench.hpp"
#include "dpgame/potential.hpp"
#include "output.hpp"

namespace dpgame::app {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs `body`, mapping input and structure errors to exit code 2.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const StructureError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

Json header(const std::string& kind, const Scenario& s) {
  Json j;
  j["kind"] = kind;
  j["format_version"] = 1;
  j["scenario_hash"] = scenario_hash(s);
  j["scenario"] = to_json(s);
  return j;
}

SolverOptions options_from_json(const Json& j) {
  SolverOptions opts;
  for (const auto& [k, v] : j.items()) {
    if (v.is_null()) continue;
    set_option(opts, k, v.dump());
  }
  return opts;
}

Scenario embedded_scenario(const Json& j) {
  const Scenario s = parse_scenario(j.at("scenario").dump(), "embedded scenario");
  if (scenario_hash(s) != j.at("scenario_hash").get<std::string>()) {
    throw InputError("embedded scenario does not match its hash");
  }
  return s;
}

}  // namespace

int run_solve(const SolveArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = load_scenario(args.scenario);
    if (args.seed) s.seed = *args.seed;
    const GameSpec spec = build_game(s);
    SolverOptions opts = solver_options(s);
    apply_overrides(opts, args.opts);
    opts.validate();
    const PotentialOCP ocp = assemble(spec, 16, s.seed);

    Json out = header("dpgame.solve", s);
    out["seed"] = s.seed;
    out["solver_options"] = options_json(opts);
    out["agents"] = layout_json(spec);

    SolveResult result;
    const auto t0 = Clock::now();
    try {
      result = solve(ocp, opts);
    } catch (const DivergenceError& e) {
      const double ms = elapsed_ms(t0);
      out["result"] = nullptr;
      out["certificate"] = nullptr;
      out["diagnostics"] = Json{{"status", "diverged"}, {"message", e.what()}};
      out["timing"] = Json{{"solve_ms", ms}};
      write_json(args.out, out);
      err << "solver diverged: " << e.what() << "\n";
      return kExitFailure;
    }
    const double solve_ms = elapsed_ms(t0);

    const auto t1 = Clock::now();
    const NashCertificate cert =
        result.converged ? certify(spec, result, opts) : kkt_residuals(spec, result);
    const double certify_ms = elapsed_ms(t1);

    out["result"] = solve_result_json(result);
    out["certificate"] = certificate_json(cert);
    Json diag;
    if (!result.converged) {
      diag["status"] = "not_converged";
      diag["message"] = "constraint violation " + std::to_string(result.max_violation) +
                        " above tolerance after " +
                        std::to_string(result.outer_iterations) + " outer iterations" +
                        (result.budget_exceeded ? " (iteration or time budget exhausted)" : "");
    } else if (!cert.passed()) {
      diag["status"] = "certificate_failed";
      diag["message"] = "Nash certificate did not pass";
    } else {
      diag["status"] = "ok";
      diag["message"] = "";
    }
    diag["max_violation"] = result.max_violation;
    diag["worst_rows"] = violation_report(spec, result.trajectory);
    out["diagnostics"] = std::move(diag);
    out["timing"] = Json{{"solve_ms", solve_ms}, {"certify_ms", certify_ms}};
    write_json(args.out, out);

    const bool ok = result.converged && cert.passed();
    log << s.name << ": " << (ok ? "converged, certificate passed" : "failed")
        << " (outer " << result.outer_iterations << ", inner "
        << result.inner_iterations << ", violation " << result.max_violation
        << ", " << solve_ms << " ms)\n";
    return ok ? kExitOk : kExitFailure;
  });
}

int run_bench(const BenchArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    BenchmarkConfig cfg = load_benchmark(args.config);
    if (args.seed) cfg.seed = *args.seed;
    if (args.trials) cfg.trials = *args.trials;
    cfg.validate();
    const Scenario s = load_scenario(cfg.scenario);
    const GameSpec spec = build_game(s);
    SolverOptions opts = solver_options(s);
    apply_overrides(opts, args.opts);
    opts.validate();
    assemble(spec, 16, s.seed);

    Json trials = Json::array();
    std::vector<double> times;
    int converged = 0, certified = 0, crashed = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t seed = trial_seed(cfg.seed, t);
      const Vec x0 = randomize_initial_state(spec, cfg, seed);
      Json rec;
      rec["trial"] = t;
      rec["seed"] = seed;
      rec["initial_state"] = to_json(x0);
      double solve_ms = 0.0, certify_ms = 0.0;
      const auto t0 = Clock::now();
      try {
        const GameSpec trial_spec = spec.with_initial_state(x0, 0);
        const PotentialOCP ocp(trial_spec);
        const SolveResult r = solve(ocp, opts);
        solve_ms = elapsed_ms(t0);
        rec["converged"] = r.converged;
        rec["max_violation"] = r.max_violation;
        rec["objective"] = r.objective;
        rec["outer_iterations"] = r.outer_iterations;
        rec["inner_iterations"] = r.inner_iterations;
        if (r.converged) ++converged;
        if (cfg.certify && r.converged) {
          const auto t1 = Clock::now();
          const NashCertificate cert = certify(trial_spec, r, opts);
          certify_ms = elapsed_ms(t1);
          rec["certified"] = cert.passed();
          rec["max_stationarity"] = cert.max_stationarity();
          double gap = 0.0;
          for (const auto& a : cert.agents) {
            if (std::isfinite(a.best_response_gap)) {
              gap = std::max(gap, a.best_response_gap / (1.0 + std::abs(a.candidate_cost)));
            }
          }
          rec["max_relative_gap"] = gap;
          if (cert.passed()) ++certified;
        }
        rec["error"] = nullptr;
      } catch (const std::exception& e) {
        solve_ms = elapsed_ms(t0);
        ++crashed;
        rec["converged"] = false;
        rec["error"] = e.what();
      }
      times.push_back(solve_ms);
      rec["timing"] = Json{{"solve_ms", solve_ms}, {"certify_ms", certify_ms}};
      trials.push_back(std::move(rec));
    }

    const double fraction = static_cast<double>(converged) / cfg.trials;
    const TimingStats st = timing_stats(times);
    const Histogram h = histogram(times, cfg.histogram_bins);

    Json out = header("dpgame.bench", s);
    out["config"] = to_json(cfg);
    out["solver_options"] = options_json(opts);
    out["agents"] = layout_json(spec);
    out["summary"] = Json{{"trials", cfg.trials},
                          {"converged", converged},
                          {"converged_fraction", fraction},
                          {"certified", certified},
                          {"crashed", crashed},
                          {"passed", fraction >= cfg.min_converged_fraction}};
    out["trials"] = std::move(trials);
    out["timing"] = Json{{"mean_ms", st.mean},
                         {"std_ms", st.std},
                         {"median_ms", st.median},
                         {"min_ms", st.min},
                         {"max_ms", st.max},
                         {"histogram", Json{{"edges_ms", h.edges}, {"counts", h.counts}}}};
    write_json(args.out, out);

    log << cfg.trials << " trials: " << converged << " converged, " << certified
        << " certified, " << crashed << " crashed; mean " << st.mean
        << " ms, median " << st.median << " ms\n";
    return fraction >= cfg.min_converged_fraction ? kExitOk : kExitFailure;
  });
}

int run_mpc(const MpcArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = load_scenario(args.scenario);
    if (args.seed) s.seed = *args.seed;
    const GameSpec spec = build_game(s);
    MPCConfig cfg = mpc_config(s);
    if (args.steps) cfg.total_steps = *args.steps;
    if (args.warm_start) {
      if (*args.warm_start == "shift") {
        cfg.warm_start = WarmStart::Shift;
      } else if (*args.warm_start == "zero") {
        cfg.warm_start = WarmStart::Zero;
      } else {
        throw InputError("warm start must be 'shift' or 'zero'");
      }
    }
    apply_overrides(cfg.solver, args.opts);
    cfg.validate();

    const ClosedLoopLog result = dpgame::run_mpc(spec, cfg);

    Json out = header("dpgame.mpc", s);
    out["mpc_config"] = mpc_config_json(cfg);
    out["solver_options"] = options_json(cfg.solver);
    out["agents"] = layout_json(spec);
    const Json log_json = mpc_log_json(result);
    for (const auto& [k, v] : log_json.items()) out[k] = v;
    write_json(args.out, out);

    if (result.failure) {
      err << "mpc failed at replan " << result.failure->replan << " (step "
          << result.failure->step << "): " << result.failure->reason << "\n";
      return kExitFailure;
    }
    log << s.name << ": " << result.controls.size() << " steps, "
        << result.replans.size() << " replans, max step violation "
        << result.max_step_violation << "\n";
    return kExitOk;
  });
}

int run_verify(const VerifyArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Json in = parse_json(read_file(args.input), args.input);
    if (!in.is_object() || in.value("kind", "") != "dpgame.solve") {
      throw InputError(args.input + ": not a solve output");
    }
    const Scenario s = embedded_scenario(in);
    const GameSpec spec = build_game(s);
    SolverOptions opts = options_from_json(in.at("solver_options"));
    apply_overrides(opts, args.opts);
    opts.validate();
    if (in.at("result").is_null()) throw InputError(args.input + ": no result to verify");
    SolveResult result = solve_result_from_json(in.at("result"));
    const int T = spec.horizon;
    const int n = spec.layout().n, m = spec.layout().m;
    if (static_cast<int>(result.trajectory.states.size()) != T + 1 ||
        static_cast<int>(result.trajectory.controls.size()) != T) {
      throw InputError(args.input + ": trajectory length does not match the horizon");
    }
    for (const auto& x : result.trajectory.states) {
      if (x.size() != n) throw InputError(args.input + ": state size mismatch");
    }
    for (const auto& u : result.trajectory.controls) {
      if (u.size() != m) throw InputError(args.input + ": control size mismatch");
    }
    evaluate_trajectory(spec, result.trajectory);

    const auto t0 = Clock::now();
    const NashCertificate cert = certify(spec, result, opts);
    const double ms = elapsed_ms(t0);

    Json out = header("dpgame.verify", s);
    out["source"] = Json{{"kind", "dpgame.solve"},
                         {"result_hash", fnv1a_hex(in.at("result").dump())}};
    out["solver_options"] = options_json(opts);
    out["certificate"] = certificate_json(cert);
    out["timing"] = Json{{"certify_ms", ms}};
    write_json(args.out, out);

    log << s.name << ": certificate " << (cert.passed() ? "passed" : "failed")
        << " (max stationarity " << cert.max_stationarity() << ")\n";
    return cert.passed() ? kExitOk : kExitFailure;
  });
}

namespace {

std::string cell(double v) { return std::isfinite(v) ? Json(v).dump() : ""; }

// Per-step, per-agent rows from a stored state sequence.
std::string trajectory_table(const Json& in) {
  std::ostringstream csv;
  csv << "k,t,agent,name,x,y,z,heading,min_pair_dist,step_violation\n";
  const Json* states = nullptr;
  const Json* violation = nullptr;
  if (in.at("kind") == "dpgame.solve") {
    const auto& r = in.at("result");
    if (r.is_null()) return csv.str();
    states = &r.at("trajectory").at("states");
    violation = &r.at("trajectory").at("step_violation");
  } else {
    states = &in.at("states");
    violation = &in.at("step_violation");
  }
  const double h = in.at("scenario").at("step_size").get<double>();
  const auto& agents = in.at("agents");
  const std::size_t N = agents.size();
  for (std::size_t k = 0; k < states->size(); ++k) {
    const Vec x = vec_from_json((*states)[k]);
    std::vector<std::vector<double>> pos(N);
    for (std::size_t i = 0; i < N; ++i) {
      const int off = agents[i].at("state_offset").get<int>();
      for (const auto& p : agents[i].at("position_indices")) {
        const int idx = off + p.get<int>();
        if (idx >= x.size()) throw InputError("state index out of range");
        pos[i].push_back(x[idx]);
      }
    }
    const double viol = k < violation->size() && (*violation)[k].is_number()
                            ? (*violation)[k].get<double>()
                            : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < N; ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const std::size_t d = std::min(pos[i].size(), pos[j].size());
        double sq = 0.0;
        for (std::size_t a = 0; a < d; ++a) sq += std::pow(pos[i][a] - pos[j][a], 2);
        dmin = std::min(dmin, std::sqrt(sq));
      }
      const auto& hi = agents[i].at("heading_index");
      const double heading =
          hi.is_null() ? std::numeric_limits<double>::quiet_NaN()
                       : x[agents[i].at("state_offset").get<int>() + hi.get<int>()];
      auto coord = [&](std::size_t a) {
        return a < pos[i].size() ? pos[i][a] : std::numeric_limits<double>::quiet_NaN();
      };
      csv << k << "," << cell(static_cast<double>(k) * h) << "," << i << ","
          << agents[i].at("name").get<std::string>() << "," << cell(coord(0)) << ","
          << cell(coord(1)) << "," << cell(coord(2)) << "," << cell(heading) << ","
          << cell(dmin) << "," << cell(viol) << "\n";
    }
  }
  return csv.str();
}

std::string histogram_table(const Json& in) {
  std::ostringstream csv;
  csv << "bin,lo_ms,hi_ms,count\n";
  const auto& h = in.at("timing").at("histogram");
  const auto& edges = h.at("edges_ms");
  const auto& counts = h.at("counts");
  if (edges.size() != counts.size() + 1) throw InputError("histogram edges do not match counts");
  for (std::size_t b = 0; b < counts.size(); ++b) {
    csv << b << "," << cell(edges[b].get<double>()) << ","
        << cell(edges[b + 1].get<double>()) << "," << counts[b].get<int>() << "\n";
  }
  return csv.str();
}

}  // namespace

int run_export(const ExportArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const Json in = parse_json(read_file(args.input), args.input);
    if (!in.is_object() || !in.contains("kind")) {
      throw InputError(args.input + ": not a dpgame output file");
    }
    const std::string kind = in.at("kind").get<std::string>();
    std::string table;
    if (kind == "dpgame.solve" || kind == "dpgame.mpc") {
      table = trajectory_table(in);
    } else if (kind == "dpgame.bench") {
      table = histogram_table(in);
    } else {
      throw InputError(args.input + ": cannot export kind '" + kind + "'");
    }
    write_text(args.out, table);
    log << "wrote " << args.out << "\n";
    return kExitOk;
  });
}

}  // namespace dpgame::app
