#include "dpgame/nash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dpgame/numerics.hpp"

namespace dpgame {

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void require_multipliers(const GameSpec& spec, const SolveResult& result) {
  const int T = spec.horizon;
  const bool states_ok =
      static_cast<int>(result.trajectory.states.size()) == T + 1 &&
      static_cast<int>(result.trajectory.controls.size()) == T;
  const bool costates_ok = static_cast<int>(result.costates.size()) == T;
  const bool stage_ok =
      spec.constraints.stage_rows() == 0 ||
      static_cast<int>(result.multipliers.stage_lambda.size()) == T;
  const bool terminal_ok =
      result.multipliers.terminal_lambda.size() ==
      spec.constraints.terminal_rows();
  if (!states_ok || !costates_ok || !stage_ok || !terminal_ok) {
    throw Error(
        "solve result carries no multipliers for this game; run solve on the "
        "potential problem first");
  }
}

// Cost gradients with respect to the joint state / control.
struct CostGradient {
  Vec lx, lu;
};

CostGradient running_gradient(const AgentCost& cost, const Vec& x, const Vec& u,
                              int k) {
  if (cost.is_quadratic()) {
    auto e = StageExpansion::zero(static_cast<int>(x.size()),
                                  static_cast<int>(u.size()));
    cost.add_running_expansion(x, u, e);
    return {e.lx, e.lu};
  }
  return {numerics::central_gradient(
              [&](const Vec& xx) { return cost.running(xx, u, k); }, x),
          numerics::central_gradient(
              [&](const Vec& uu) { return cost.running(x, uu, k); }, u)};
}

Vec terminal_gradient(const AgentCost& cost, const Vec& x) {
  if (cost.is_quadratic()) {
    auto e = TerminalExpansion::zero(static_cast<int>(x.size()));
    cost.add_terminal_expansion(x, e);
    return e.lx;
  }
  return numerics::central_gradient(
      [&](const Vec& xx) { return cost.terminal(xx); }, x);
}

// Shared skeleton: `gradient` supplies (running, terminal) cost gradients
// for either one agent or the potential.
template <typename RunningGrad, typename TerminalGrad>
StationarityVectors stationarity(const GameSpec& spec,
                                 const SolveResult& result, int agent,
                                 RunningGrad running, TerminalGrad terminal) {
  require_multipliers(spec, result);
  const int T = spec.horizon;
  const auto layout = spec.layout();
  const int xo = layout.state_offset[agent], nd = layout.state_dim[agent];
  const int uo = layout.control_offset[agent], md = layout.control_dim[agent];
  const auto dyn = spec.dynamics();
  const auto& X = result.trajectory.states;
  const auto& U = result.trajectory.controls;
  const auto& xi = result.costates;
  const auto& mult = result.multipliers;
  const bool has_stage = spec.constraints.stage_rows() > 0;

  StationarityVectors out;
  Mat A, B, jx, ju;
  for (int k = 0; k < T; ++k) {
    const int abs_k = spec.start_step + k;
    const CostGradient g = running(X[k], U[k], abs_k);
    dyn.jacobians(X[k], U[k], abs_k, A, B);
    Vec cx = Vec::Zero(nd), cu = Vec::Zero(md);
    if (has_stage) {
      spec.constraints.stage_jacobian(X[k], U[k], abs_k, jx, ju);
      cx = jx.middleCols(xo, nd).transpose() * mult.stage_lambda[k];
      cu = ju.middleCols(uo, md).transpose() * mult.stage_lambda[k];
    }
    const Vec bx = B.middleCols(uo, md).transpose() * xi[k];
    const Vec gu = g.lu.segment(uo, md);
    out.control.push_back(gu + bx + cu);
    out.control_scale.push_back(
        std::max({inf_norm(gu), inf_norm(bx), inf_norm(cu)}));
    if (k >= 1) {
      const Vec ax = A.middleCols(xo, nd).transpose() * xi[k];
      const Vec gx = g.lx.segment(xo, nd);
      const Vec prev = xi[k - 1].segment(xo, nd);
      out.state.push_back(gx + ax + cx - prev);
      out.state_scale.push_back(std::max(
          {inf_norm(gx), inf_norm(ax), inf_norm(cx), inf_norm(prev)}));
    }
  }
  const Vec gT = terminal(X[T]).segment(xo, nd);
  Vec cT = Vec::Zero(nd);
  if (spec.constraints.terminal_rows() > 0) {
    spec.constraints.terminal_jacobian(X[T], spec.start_step + T, jx);
    cT = jx.middleCols(xo, nd).transpose() * mult.terminal_lambda;
  }
  const Vec prev = T > 0 ? Vec(xi[T - 1].segment(xo, nd)) : Vec::Zero(nd);
  out.terminal = gT + cT - prev;
  out.terminal_scale = std::max({inf_norm(gT), inf_norm(cT), inf_norm(prev)});
  return out;
}

double scaled_max(const std::vector<Vec>& r, const std::vector<double>& scale) {
  double worst = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    worst = std::max(worst, inf_norm(r[k]) / (1.0 + scale[k]));
  }
  return worst;
}

}  // namespace

StationarityVectors agent_stationarity(const GameSpec& spec,
                                       const SolveResult& result, int agent) {
  const auto& cost = spec.agents.at(agent).cost;
  return stationarity(
      spec, result, agent,
      [&](const Vec& x, const Vec& u, int k) {
        return running_gradient(cost, x, u, k);
      },
      [&](const Vec& x) { return terminal_gradient(cost, x); });
}

StationarityVectors potential_stationarity(const GameSpec& spec,
                                           const SolveResult& result,
                                           int agent) {
  if (agent < 0 || agent >= spec.num_agents()) {
    throw InputError("agent index out of range");
  }
  return stationarity(
      spec, result, agent,
      [&](const Vec& x, const Vec& u, int k) {
        CostGradient total{Vec::Zero(x.size()), Vec::Zero(u.size())};
        for (const auto& a : spec.agents) {
          const auto g = running_gradient(a.cost, x, u, k);
          total.lx += g.lx;
          total.lu += g.lu;
        }
        return total;
      },
      [&](const Vec& x) {
        Vec total = Vec::Zero(x.size());
        for (const auto& a : spec.agents) total += terminal_gradient(a.cost, x);
        return total;
      });
}

double NashCertificate::max_stationarity() const {
  double worst = 0.0;
  for (const auto& a : agents) {
    worst = std::max({worst, a.state_stationarity, a.control_stationarity,
                      a.terminal_stationarity});
  }
  return worst;
}

bool NashCertificate::kkt_passed() const {
  return converged && max_stationarity() <= tolerances.stationarity &&
         primal_feasibility <= tolerances.feasibility &&
         complementarity <= tolerances.complementarity;
}

bool NashCertificate::passed() const {
  if (!kkt_passed()) return false;
  for (const auto& a : agents) {
    if (!a.gap_evaluated) continue;
    if (a.gap_indeterminate) return false;
    if (a.best_response_gap >
        tolerances.gap_relative * (1.0 + std::abs(a.candidate_cost))) {
      return false;
    }
  }
  return true;
}

NashCertificate kkt_residuals(const GameSpec& spec, const SolveResult& result,
                              const CertificateTolerances& tol) {
  require_multipliers(spec, result);
  NashCertificate cert;
  cert.tolerances = tol;
  cert.converged = result.converged;
  const int T = spec.horizon;
  const auto& traj = result.trajectory;

  for (int i = 0; i < spec.num_agents(); ++i) {
    const auto r = agent_stationarity(spec, result, i);
    AgentCertificate a;
    a.state_stationarity = scaled_max(r.state, r.state_scale);
    a.control_stationarity = scaled_max(r.control, r.control_scale);
    a.terminal_stationarity = inf_norm(r.terminal) / (1.0 + r.terminal_scale);
    a.candidate_cost = agent_cost(spec, i, traj.states, traj.controls);
    cert.agents.push_back(a);
  }

  // Primal feasibility: dynamics defect and constraint violation.
  const auto dyn = spec.dynamics();
  double defect = inf_norm(traj.states[0] - spec.initial_state);
  for (int k = 0; k < T; ++k) {
    const Vec next =
        dyn.step(traj.states[k], traj.controls[k], spec.start_step + k);
    defect = std::max(defect, inf_norm(next - traj.states[k + 1]));
  }
  cert.primal_feasibility = std::max(defect, max_violation(spec, traj));

  // Complementarity and dual sign on inequality rows.
  const auto stage_kinds = spec.constraints.stage_row_kinds();
  const auto terminal_kinds = spec.constraints.terminal_row_kinds();
  auto comp = [&](const Vec& g, const Vec& mu,
                  const std::vector<ConstraintKind>& kinds) {
    for (Eigen::Index r = 0; r < g.size(); ++r) {
      if (kinds[r] == ConstraintKind::Equality) continue;
      cert.complementarity =
          std::max({cert.complementarity,
                    std::abs(mu[r] * g[r]) / (1.0 + std::abs(mu[r])),
                    std::max(-mu[r], 0.0)});
    }
  };
  if (!stage_kinds.empty()) {
    for (int k = 0; k < T; ++k) {
      comp(spec.constraints.evaluate_stage(traj.states[k], traj.controls[k],
                                           spec.start_step + k),
           result.multipliers.stage_lambda[k], stage_kinds);
    }
  }
  if (!terminal_kinds.empty()) {
    comp(spec.constraints.evaluate_terminal(traj.states[T],
                                            spec.start_step + T),
         result.multipliers.terminal_lambda, terminal_kinds);
  }

  // Each agent's own backward recursion (its cost, shared delta) should
  // reproduce its block of the common costate.
  const auto layout = spec.layout();
  Mat A, B, jx, ju;
  double mismatch = 0.0;
  for (int i = 0; i < spec.num_agents() && T > 0; ++i) {
    const int xo = layout.state_offset[i], nd = layout.state_dim[i];
    const auto& cost = spec.agents[i].cost;
    Vec xi_i = terminal_gradient(cost, traj.states[T]).segment(xo, nd);
    if (!terminal_kinds.empty()) {
      spec.constraints.terminal_jacobian(traj.states[T], spec.start_step + T,
                                         jx);
      xi_i += jx.middleCols(xo, nd).transpose() *
              result.multipliers.terminal_lambda;
    }
    for (int k = T - 1; k >= 0; --k) {
      const Vec& ref = result.costates[k];
      mismatch = std::max(mismatch, inf_norm(xi_i - ref.segment(xo, nd)) /
                                        (1.0 + inf_norm(ref)));
      if (k == 0) break;
      const int abs_k = spec.start_step + k;
      const auto g = running_gradient(cost, traj.states[k], traj.controls[k],
                                      abs_k);
      dyn.jacobians(traj.states[k], traj.controls[k], abs_k, A, B);
      Vec next = g.lx.segment(xo, nd) +
                 A.block(xo, xo, nd, nd).transpose() * xi_i;
      if (!stage_kinds.empty()) {
        spec.constraints.stage_jacobian(traj.states[k], traj.controls[k],
                                        abs_k, jx, ju);
        next += jx.middleCols(xo, nd).transpose() *
                result.multipliers.stage_lambda[k];
      }
      xi_i = std::move(next);
    }
  }
  cert.multiplier_mismatch = mismatch;
  cert.multipliers_consistent = mismatch <= 1e-8;
  return cert;
}

// --- best response ------------------------------------------------------------------

BestResponseProblem::BestResponseProblem(const GameSpec& spec,
                                         const Trajectory& candidate,
                                         int agent)
    : spec_(spec),
      frozen_x_(candidate.states),
      frozen_u_(candidate.controls),
      agent_(agent) {
  if (agent < 0 || agent >= spec.num_agents()) {
    throw InputError("best response: agent index out of range");
  }
  if (static_cast<int>(frozen_u_.size()) != spec.horizon ||
      static_cast<int>(frozen_x_.size()) != spec.horizon + 1) {
    throw InputError("best response: candidate length does not match horizon");
  }
  const auto layout = spec.layout();
  xo_ = layout.state_offset[agent];
  n_ = layout.state_dim[agent];
  uo_ = layout.control_offset[agent];
  m_ = layout.control_dim[agent];
  model_ = spec.agents[agent].model;
  x0_ = spec.initial_state.segment(xo_, n_);

  int row = 0;
  for (const auto& c : spec.constraints.stage) {
    if (c->scope().involves(agent)) {
      stage_.push_back(c);
      for (int r = 0; r < c->rows(); ++r) {
        stage_rows_.push_back(row + r);
        stage_kinds_.push_back(c->kind());
      }
    }
    row += c->rows();
  }
  row = 0;
  for (const auto& c : spec.constraints.terminal) {
    if (c->scope().involves(agent)) {
      terminal_.push_back(c);
      for (int r = 0; r < c->rows(); ++r) {
        terminal_rows_.push_back(row + r);
        terminal_kinds_.push_back(c->kind());
      }
    }
    row += c->rows();
  }
}

Vec BestResponseProblem::joint_state(const Vec& x, int k) const {
  Vec joint = frozen_x_[k];
  joint.segment(xo_, n_) = x;
  return joint;
}

Vec BestResponseProblem::joint_control(const Vec& u, int k) const {
  // Terminal step has no frozen control; callers only use k < T.
  Vec joint = frozen_u_[std::min<std::size_t>(k, frozen_u_.size() - 1)];
  joint.segment(uo_, m_) = u;
  return joint;
}

Vec BestResponseProblem::step(const Vec& x, const Vec& u, int k) const {
  return model_->step(x, u, spec_.start_step + k, spec_.step_size);
}

void BestResponseProblem::dynamics_jacobians(const Vec& x, const Vec& u, int k,
                                             Mat& A, Mat& B) const {
  model_->jacobians(x, u, spec_.start_step + k, spec_.step_size, A, B);
}

double BestResponseProblem::running_cost(const Vec& x, const Vec& u,
                                         int k) const {
  return spec_.agents[agent_].cost.running(joint_state(x, k),
                                           joint_control(u, k),
                                           spec_.start_step + k);
}

double BestResponseProblem::terminal_cost(const Vec& x) const {
  return spec_.agents[agent_].cost.terminal(joint_state(x, spec_.horizon));
}

StageExpansion BestResponseProblem::running_expansion(const Vec& x,
                                                      const Vec& u,
                                                      int k) const {
  const auto& cost = spec_.agents[agent_].cost;
  if (!cost.is_quadratic()) {
    return fd_stage_expansion(
        [&](const Vec& xx, const Vec& uu) { return running_cost(xx, uu, k); },
        x, u);
  }
  const Vec jx = joint_state(x, k), ju = joint_control(u, k);
  auto full = StageExpansion::zero(static_cast<int>(jx.size()),
                                   static_cast<int>(ju.size()));
  cost.add_running_expansion(jx, ju, full);
  StageExpansion e;
  e.lx = full.lx.segment(xo_, n_);
  e.lu = full.lu.segment(uo_, m_);
  e.lxx = full.lxx.block(xo_, xo_, n_, n_);
  e.luu = full.luu.block(uo_, uo_, m_, m_);
  e.lux = full.lux.block(uo_, xo_, m_, n_);
  return e;
}

TerminalExpansion BestResponseProblem::terminal_expansion(const Vec& x) const {
  const auto& cost = spec_.agents[agent_].cost;
  if (!cost.is_quadratic()) {
    return fd_terminal_expansion([&](const Vec& xx) { return terminal_cost(xx); },
                                 x);
  }
  const Vec jx = joint_state(x, spec_.horizon);
  auto full = TerminalExpansion::zero(static_cast<int>(jx.size()));
  cost.add_terminal_expansion(jx, full);
  return {full.lx.segment(xo_, n_), full.lxx.block(xo_, xo_, n_, n_)};
}

Vec BestResponseProblem::stage_constraints(const Vec& x, const Vec& u,
                                           int k) const {
  const Vec jx = joint_state(x, k), ju = joint_control(u, k);
  Vec out(static_cast<Eigen::Index>(stage_kinds_.size()));
  int row = 0;
  for (const auto& c : stage_) {
    c->evaluate(jx, ju, spec_.start_step + k, out.segment(row, c->rows()));
    row += c->rows();
  }
  return out;
}

void BestResponseProblem::stage_constraint_jacobians(const Vec& x,
                                                     const Vec& u, int k,
                                                     Mat& jx, Mat& ju) const {
  const Vec X = joint_state(x, k), U = joint_control(u, k);
  const auto rows = static_cast<Eigen::Index>(stage_kinds_.size());
  Mat fx = Mat::Zero(rows, X.size()), fu = Mat::Zero(rows, U.size());
  int row = 0;
  for (const auto& c : stage_) {
    c->jacobian(X, U, spec_.start_step + k, fx.middleRows(row, c->rows()),
                fu.middleRows(row, c->rows()));
    row += c->rows();
  }
  jx = fx.middleCols(xo_, n_);
  ju = fu.middleCols(uo_, m_);
}

Vec BestResponseProblem::terminal_constraints(const Vec& x) const {
  const Vec X = joint_state(x, spec_.horizon);
  const Vec none;
  Vec out(static_cast<Eigen::Index>(terminal_kinds_.size()));
  int row = 0;
  for (const auto& c : terminal_) {
    c->evaluate(X, none, spec_.start_step + spec_.horizon,
                out.segment(row, c->rows()));
    row += c->rows();
  }
  return out;
}

void BestResponseProblem::terminal_constraint_jacobian(const Vec& x,
                                                       Mat& jx) const {
  const Vec X = joint_state(x, spec_.horizon);
  const Vec none;
  const auto rows = static_cast<Eigen::Index>(terminal_kinds_.size());
  Mat fx = Mat::Zero(rows, X.size());
  Mat fu = Mat::Zero(rows, 0);
  int row = 0;
  for (const auto& c : terminal_) {
    c->jacobian(X, none, spec_.start_step + spec_.horizon,
                fx.middleRows(row, c->rows()), fu.middleRows(row, c->rows()));
    row += c->rows();
  }
  jx = fx.middleCols(xo_, n_);
}

MultiplierState BestResponseProblem::restrict_multipliers(
    const MultiplierState& full) const {
  MultiplierState out;
  if (full.empty() && !(stage_rows_.empty() && terminal_rows_.empty())) {
    return out;
  }
  const auto T = static_cast<std::size_t>(spec_.horizon);
  out.stage_lambda.assign(T, Vec::Zero(static_cast<Eigen::Index>(stage_rows_.size())));
  for (std::size_t k = 0; k < T && !stage_rows_.empty(); ++k) {
    for (std::size_t r = 0; r < stage_rows_.size(); ++r) {
      out.stage_lambda[k][static_cast<Eigen::Index>(r)] =
          full.stage_lambda[k][stage_rows_[r]];
    }
  }
  out.terminal_lambda =
      Vec::Zero(static_cast<Eigen::Index>(terminal_rows_.size()));
  for (std::size_t r = 0; r < terminal_rows_.size(); ++r) {
    out.terminal_lambda[static_cast<Eigen::Index>(r)] =
        full.terminal_lambda[terminal_rows_[r]];
  }
  return out;
}

ControlSequence BestResponseProblem::candidate_controls() const {
  ControlSequence out;
  out.reserve(frozen_u_.size());
  for (const auto& u : frozen_u_) out.push_back(u.segment(uo_, m_));
  return out;
}

AgentCertificate best_response_gap(const GameSpec& spec,
                                   const SolveResult& result, int agent,
                                   const SolverOptions& opts) {
  AgentCertificate out;
  out.gap_evaluated = true;
  const auto& traj = result.trajectory;
  out.candidate_cost = agent_cost(spec, agent, traj.states, traj.controls);

  const BestResponseProblem br(spec, traj, agent);
  const auto warm = br.restrict_multipliers(result.multipliers);
  try {
    const auto sol = solve(br, opts, br.candidate_controls(),
                           warm.empty() ? nullptr : &warm);
    StateSequence xs;
    ControlSequence us;
    for (int k = 0; k <= spec.horizon; ++k) {
      xs.push_back(br.joint_state(sol.trajectory.states[k], k));
    }
    for (int k = 0; k < spec.horizon; ++k) {
      us.push_back(br.joint_control(sol.trajectory.controls[k], k));
    }
    out.best_response_cost = agent_cost(spec, agent, xs, us);
    out.best_response_gap = out.candidate_cost - out.best_response_cost;
    if (!sol.converged || sol.max_violation > opts.constraint_tolerance) {
      out.gap_indeterminate = true;
      std::ostringstream msg;
      msg << "best-response solve for agent " << agent
          << (sol.converged ? " converged" : " did not converge")
          << " with violation " << sol.max_violation << " after "
          << sol.outer_iterations << " outer iterations";
      out.gap_diagnostics = msg.str();
    }
  } catch (const DivergenceError& e) {
    out.gap_indeterminate = true;
    out.best_response_cost = std::numeric_limits<double>::quiet_NaN();
    out.best_response_gap = std::numeric_limits<double>::quiet_NaN();
    out.gap_diagnostics =
        "best-response solve for agent " + std::to_string(agent) +
        " diverged: " + e.what();
  }
  return out;
}

NashCertificate certify(const GameSpec& spec, const SolveResult& result,
                        const SolverOptions& opts,
                        const CertificateTolerances& tol) {
  NashCertificate cert = kkt_residuals(spec, result, tol);
  for (int i = 0; i < spec.num_agents(); ++i) {
    const auto gap = best_response_gap(spec, result, i, opts);
    auto& a = cert.agents[i];
    a.best_response_cost = gap.best_response_cost;
    a.best_response_gap = gap.best_response_gap;
    a.gap_evaluated = true;
    a.gap_indeterminate = gap.gap_indeterminate;
    a.gap_diagnostics = gap.gap_diagnostics;
  }
  return cert;
}

// --- brute force ------------------------------------------------------------------

BruteForceResult brute_force_nash(const GameSpec& spec,
                                  const std::vector<std::vector<double>>& grids) {
  const int N = spec.num_agents();
  const int T = spec.horizon;
  if (N < 1 || N > 2) throw InputError("brute force: needs 1 or 2 agents");
  if (T < 1 || T > 3) throw InputError("brute force: needs 1 <= T <= 3");
  if (static_cast<int>(grids.size()) != N) {
    throw InputError("brute force: one grid per agent required");
  }
  const auto layout = spec.layout();
  for (int i = 0; i < N; ++i) {
    if (layout.control_dim[i] != 1) {
      throw InputError("brute force: controls must be scalar");
    }
    if (grids[i].empty() || grids[i].size() > 15) {
      throw InputError("brute force: each grid needs 1..15 points");
    }
  }
  const auto issues = validate_spec(spec);
  if (!issues.empty()) throw InputError("invalid game spec:\n" + to_string(issues));

  // Sequences per agent: grid^T, encoded in base |grid|.
  std::vector<long long> seqs(N, 1);
  long double total = 1.0L;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < T; ++k) seqs[i] *= static_cast<long long>(grids[i].size());
    total *= static_cast<long double>(seqs[i]);
  }
  if (total > static_cast<long double>(kBruteForceMaxProfiles)) {
    std::ostringstream msg;
    msg << "brute force: " << static_cast<double>(total)
        << " profiles exceed the limit of " << kBruteForceMaxProfiles;
    throw InputError(msg.str());
  }
  const long long profiles = static_cast<long long>(total);
  const long long stride = N == 2 ? seqs[0] : 1;

  auto controls_of = [&](long long profile) {
    ControlSequence us(T, Vec::Zero(layout.m));
    long long s[2] = {profile % seqs[0], N == 2 ? profile / stride : 0};
    for (int i = 0; i < N; ++i) {
      long long code = s[i];
      const auto G = static_cast<long long>(grids[i].size());
      for (int k = 0; k < T; ++k) {
        us[k][layout.control_offset[i]] = grids[i][code % G];
        code /= G;
      }
    }
    return us;
  };

  const PotentialOCP ocp(spec);
  std::vector<double> cost(static_cast<std::size_t>(profiles * N));
  std::vector<double> potential(static_cast<std::size_t>(profiles));
  std::vector<char> feasible(static_cast<std::size_t>(profiles));
  BruteForceResult out;
  out.profiles = profiles;
  for (long long p = 0; p < profiles; ++p) {
    const auto us = controls_of(p);
    const auto xs = simulate(ocp, us);
    for (int i = 0; i < N; ++i) cost[p * N + i] = agent_cost(spec, i, xs, us);
    potential[p] = objective(ocp, xs, us);
    feasible[p] = max_violation(ocp, xs, us) <= 1e-12;
    out.feasible += feasible[p];
  }

  long long argmin = -1;
  for (long long p = 0; p < profiles; ++p) {
    if (feasible[p] && (argmin < 0 || potential[p] < potential[argmin])) {
      argmin = p;
    }
  }

  auto make_profile = [&](long long p) {
    BruteForceProfile prof;
    prof.controls = controls_of(p);
    prof.costs.assign(cost.begin() + p * N, cost.begin() + (p + 1) * N);
    prof.potential = potential[p];
    return prof;
  };

  for (long long p = 0; p < profiles; ++p) {
    if (!feasible[p]) continue;
    const long long s0 = p % seqs[0];
    const long long s1 = N == 2 ? p / stride : 0;
    bool equilibrium = true;
    for (int i = 0; i < N && equilibrium; ++i) {
      const double mine = cost[p * N + i];
      const double eps = 1e-12 * (1.0 + std::abs(mine));
      for (long long alt = 0; alt < seqs[i]; ++alt) {
        const long long q = i == 0 ? alt + s1 * stride : s0 + alt * stride;
        if (q == p || !feasible[q]) continue;
        if (cost[q * N + i] < mine - eps) {
          equilibrium = false;
          break;
        }
      }
    }
    if (equilibrium) {
      out.equilibria.push_back(make_profile(p));
      if (p == argmin) out.argmin_is_equilibrium = true;
    }
  }
  if (argmin >= 0) {
    out.has_feasible = true;
    out.potential_argmin = make_profile(argmin);
  }
  return out;
}

}  // namespace dpgame
