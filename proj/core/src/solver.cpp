#include "dpgame/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace dpgame {

// --- options -------------------------------------------------------------------

void SolverOptions::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError(std::string("solver option ") + name + " must be > 0");
    }
  };
  positive(constraint_tolerance, "constraint_tolerance");
  positive(cost_tolerance, "cost_tolerance");
  positive(complementarity_tolerance, "complementarity_tolerance");
  positive(stationarity_tolerance, "stationarity_tolerance");
  positive(gradient_tolerance, "gradient_tolerance");
  positive(penalty_initial, "penalty_initial");
  positive(penalty_max, "penalty_max");
  positive(regularization_initial, "regularization_initial");
  positive(regularization_min, "regularization_min");
  positive(regularization_max, "regularization_max");
  positive(min_step, "min_step");
  positive(active_set_factor, "active_set_factor");
  positive(polish_tolerance, "polish_tolerance");
  if (max_outer_iterations < 1 || max_inner_iterations < 1 ||
      max_polish_steps < 0) {
    throw InputError("solver iteration limits must be positive");
  }
  if (!(penalty_scale > 1.0)) {
    throw InputError("solver option penalty_scale must be > 1");
  }
  if (!(regularization_factor > 1.0)) {
    throw InputError("solver option regularization_factor must be > 1");
  }
  if (!(line_search_factor > 0.0 && line_search_factor < 1.0)) {
    throw InputError("solver option line_search_factor must be in (0, 1)");
  }
  if (time_budget_ms && !(*time_budget_ms > 0.0)) {
    throw InputError("solver option time_budget_ms must be > 0");
  }
}

void set_option(SolverOptions& opts, const std::string& key,
                const std::string& value) {
  auto number = [&]() {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw InputError("solver option " + key + ": '" + value +
                       "' is not a number");
    }
    return v;
  };
  auto integer = [&]() {
    const double v = number();
    if (v != std::floor(v)) {
      throw InputError("solver option " + key + " must be an integer");
    }
    return static_cast<int>(v);
  };
  if (key == "constraint_tolerance") opts.constraint_tolerance = number();
  else if (key == "cost_tolerance") opts.cost_tolerance = number();
  else if (key == "complementarity_tolerance") opts.complementarity_tolerance = number();
  else if (key == "stationarity_tolerance") opts.stationarity_tolerance = number();
  else if (key == "gradient_tolerance") opts.gradient_tolerance = number();
  else if (key == "max_outer_iterations") opts.max_outer_iterations = integer();
  else if (key == "max_inner_iterations") opts.max_inner_iterations = integer();
  else if (key == "penalty_initial") opts.penalty_initial = number();
  else if (key == "penalty_scale") opts.penalty_scale = number();
  else if (key == "penalty_max") opts.penalty_max = number();
  else if (key == "regularization_initial") opts.regularization_initial = number();
  else if (key == "regularization_min") opts.regularization_min = number();
  else if (key == "regularization_max") opts.regularization_max = number();
  else if (key == "regularization_factor") opts.regularization_factor = number();
  else if (key == "line_search_factor") opts.line_search_factor = number();
  else if (key == "min_step") opts.min_step = number();
  else if (key == "active_set_factor") opts.active_set_factor = number();
  else if (key == "max_polish_steps") opts.max_polish_steps = integer();
  else if (key == "polish_tolerance") opts.polish_tolerance = number();
  else if (key == "time_budget_ms") opts.time_budget_ms = number();
  else if (key == "projection_polish") {
    if (value == "true" || value == "1" || value == "on") {
      opts.projection_polish = true;
    } else if (value == "false" || value == "0" || value == "off") {
      opts.projection_polish = false;
    } else {
      throw InputError("solver option projection_polish must be true/false");
    }
  } else {
    throw InputError("unknown solver option '" + key + "'");
  }
}

// --- multipliers -----------------------------------------------------------------

MultiplierState MultiplierState::initial(const ControlProblem& problem,
                                         double penalty) {
  const auto stage_rows =
      static_cast<Eigen::Index>(problem.stage_row_kinds().size());
  const auto terminal_rows =
      static_cast<Eigen::Index>(problem.terminal_row_kinds().size());
  MultiplierState s;
  s.stage_lambda.assign(problem.horizon(), Vec::Zero(stage_rows));
  s.stage_penalty.assign(problem.horizon(), Vec::Constant(stage_rows, penalty));
  s.terminal_lambda = Vec::Zero(terminal_rows);
  s.terminal_penalty = Vec::Constant(terminal_rows, penalty);
  return s;
}

namespace {

// Powell-Hestenes-Rockafellar term for an inequality row; the usual
// lambda e + mu/2 e^2 for an equality row.
double penalty_term(double g, double lambda, double mu, ConstraintKind kind) {
  if (kind == ConstraintKind::Equality) return lambda * g + 0.5 * mu * g * g;
  const double s = std::max(0.0, lambda + mu * g);
  return (s * s - lambda * lambda) / (2.0 * mu);
}

// First derivative of the penalty term with respect to g, and the
// Gauss-Newton curvature.
void penalty_derivatives(double g, double lambda, double mu,
                         ConstraintKind kind, double& slope, double& curvature) {
  if (kind == ConstraintKind::Equality) {
    slope = lambda + mu * g;
    curvature = mu;
    return;
  }
  const double s = lambda + mu * g;
  slope = s > 0.0 ? s : 0.0;
  curvature = s > 0.0 ? mu : 0.0;
}

double penalty_sum(const Vec& g, const Vec& lambda, const Vec& mu,
                   const std::vector<ConstraintKind>& kinds) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    total += penalty_term(g[r], lambda[r], mu[r], kinds[r]);
  }
  return total;
}

Vec updated_lambda(const Vec& g, const Vec& lambda, const Vec& mu,
                   const std::vector<ConstraintKind>& kinds) {
  Vec out(g.size());
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    const double raw = lambda[r] + mu[r] * g[r];
    out[r] = kinds[r] == ConstraintKind::Equality ? raw : std::max(0.0, raw);
  }
  return out;
}

Vec updated_penalty(const Vec& g, const Vec& mu,
                    const std::vector<ConstraintKind>& kinds,
                    const SolverOptions& opts) {
  Vec out = mu;
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    const double v = kinds[r] == ConstraintKind::Equality ? std::abs(g[r])
                                                          : std::max(g[r], 0.0);
    if (v > opts.constraint_tolerance) {
      out[r] = std::min(opts.penalty_scale * mu[r], opts.penalty_max);
    }
  }
  return out;
}

void add_penalty_expansion(const Vec& g, const Mat& jx, const Mat* ju,
                           const Vec& lambda, const Vec& mu,
                           const std::vector<ConstraintKind>& kinds, Vec& lx,
                           Mat& lxx, Vec* lu, Mat* luu, Mat* lux) {
  // Only rows with a nonzero slope or curvature contribute.
  std::vector<Eigen::Index> live;
  std::vector<double> slope, curvature;
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    double s = 0.0, c = 0.0;
    penalty_derivatives(g[r], lambda[r], mu[r], kinds[r], s, c);
    if (s != 0.0 || c != 0.0) {
      live.push_back(r);
      slope.push_back(s);
      curvature.push_back(c);
    }
  }
  if (live.empty()) return;
  const auto rows = static_cast<Eigen::Index>(live.size());
  const Eigen::Map<const Vec> sl(slope.data(), rows);
  const Eigen::Map<const Vec> cu(curvature.data(), rows);
  const Mat gx = jx(live, Eigen::all);
  lx.noalias() += gx.transpose() * sl;
  const Mat wgx = cu.asDiagonal() * gx;
  lxx.noalias() += gx.transpose() * wgx;
  if (ju != nullptr) {
    const Mat gu = (*ju)(live, Eigen::all);
    lu->noalias() += gu.transpose() * sl;
    luu->noalias() += gu.transpose() * cu.asDiagonal() * gu;
    lux->noalias() += gu.transpose() * wgx;
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

MultiplierState update_multipliers(
    const MultiplierState& state, const std::vector<Vec>& stage_values,
    const Vec& terminal_values, const std::vector<ConstraintKind>& stage_kinds,
    const std::vector<ConstraintKind>& terminal_kinds,
    const SolverOptions& opts) {
  MultiplierState next = state;
  for (std::size_t k = 0; k < stage_values.size(); ++k) {
    next.stage_lambda[k] = updated_lambda(
        stage_values[k], state.stage_lambda[k], state.stage_penalty[k],
        stage_kinds);
    next.stage_penalty[k] = updated_penalty(
        stage_values[k], state.stage_penalty[k], stage_kinds, opts);
  }
  next.terminal_lambda =
      updated_lambda(terminal_values, state.terminal_lambda,
                     state.terminal_penalty, terminal_kinds);
  next.terminal_penalty = updated_penalty(
      terminal_values, state.terminal_penalty, terminal_kinds, opts);
  return next;
}

// --- objective and expansion -------------------------------------------------------

double augmented_objective(const ControlProblem& problem,
                           const StateSequence& states,
                           const ControlSequence& controls,
                           const MultiplierState& mult) {
  const auto& sk = problem.stage_row_kinds();
  double total = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const int kk = static_cast<int>(k);
    total += problem.running_cost(states[k], controls[k], kk);
    if (!sk.empty()) {
      total += penalty_sum(problem.stage_constraints(states[k], controls[k], kk),
                           mult.stage_lambda[k], mult.stage_penalty[k], sk);
    }
  }
  total += problem.terminal_cost(states.back());
  if (!problem.terminal_row_kinds().empty()) {
    total += penalty_sum(problem.terminal_constraints(states.back()),
                         mult.terminal_lambda, mult.terminal_penalty,
                         problem.terminal_row_kinds());
  }
  return total;
}

LqData expand(const ControlProblem& problem, const StateSequence& states,
              const ControlSequence& controls, const MultiplierState& mult) {
  const int T = static_cast<int>(controls.size());
  const auto& sk = problem.stage_row_kinds();
  LqData data;
  data.A.resize(T);
  data.B.resize(T);
  data.stage.resize(T);
  Mat jx, ju;
  for (int k = 0; k < T; ++k) {
    problem.dynamics_jacobians(states[k], controls[k], k, data.A[k], data.B[k]);
    auto e = problem.running_expansion(states[k], controls[k], k);
    if (!sk.empty()) {
      const Vec g = problem.stage_constraints(states[k], controls[k], k);
      problem.stage_constraint_jacobians(states[k], controls[k], k, jx, ju);
      add_penalty_expansion(g, jx, &ju, mult.stage_lambda[k],
                            mult.stage_penalty[k], sk, e.lx, e.lxx, &e.lu,
                            &e.luu, &e.lux);
    }
    data.stage[k] = std::move(e);
  }
  data.terminal = problem.terminal_expansion(states.back());
  const auto& tk = problem.terminal_row_kinds();
  if (!tk.empty()) {
    const Vec g = problem.terminal_constraints(states.back());
    problem.terminal_constraint_jacobian(states.back(), jx);
    add_penalty_expansion(g, jx, nullptr, mult.terminal_lambda,
                          mult.terminal_penalty, tk, data.terminal.lx,
                          data.terminal.lxx, nullptr, nullptr, nullptr);
  }
  return data;
}

// --- backward / forward pass -------------------------------------------------------

BackwardPassResult backward_pass(const LqData& data, double regularization,
                                 const SolverOptions& opts) {
  const int T = static_cast<int>(data.stage.size());
  BackwardPassResult out;
  out.feedforward.resize(T);
  out.gains.resize(T);
  double rho = std::max(regularization, opts.regularization_min);

  while (true) {
    Vec vx = data.terminal.lx;
    Mat vxx = data.terminal.lxx;
    out.dv_linear = 0.0;
    out.dv_quadratic = 0.0;
    out.max_gradient = 0.0;
    bool ok = true;
    for (int k = T - 1; k >= 0; --k) {
      const auto& e = data.stage[k];
      const Mat& A = data.A[k];
      const Mat& B = data.B[k];
      const Vec qx = e.lx + A.transpose() * vx;
      const Vec qu = e.lu + B.transpose() * vx;
      const Mat btv = B.transpose() * vxx;
      const Mat qxx = e.lxx + A.transpose() * vxx * A;
      const Mat quu = e.luu + btv * B;
      const Mat qux = e.lux + btv * A;

      const Mat quu_reg =
          quu + rho * Mat::Identity(quu.rows(), quu.cols());
      Eigen::LLT<Mat> llt(quu_reg);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      Vec d = -llt.solve(qu);
      Mat K = -llt.solve(qux);

      out.dv_linear += d.dot(qu);
      out.dv_quadratic += 0.5 * d.dot(quu * d);
      if (qu.size() > 0) {
        out.max_gradient = std::max(out.max_gradient, qu.cwiseAbs().maxCoeff());
      }

      vx = qx + K.transpose() * (quu * d) + K.transpose() * qu +
           qux.transpose() * d;
      vxx = qxx + K.transpose() * quu * K + K.transpose() * qux +
            qux.transpose() * K;
      vxx = 0.5 * (vxx + vxx.transpose()).eval();

      out.feedforward[k] = std::move(d);
      out.gains[k] = std::move(K);
    }
    if (ok) {
      out.regularization = rho;
      return out;
    }
    rho *= opts.regularization_factor;
    ++out.regularization_increases;
    if (rho > opts.regularization_max) {
      throw DivergenceError(
          "backward pass: control Hessian not positive definite even with "
          "regularization above the maximum");
    }
  }
}

ForwardPassResult forward_pass(const ControlProblem& problem,
                               const StateSequence& states,
                               const ControlSequence& controls,
                               const BackwardPassResult& bp,
                               const MultiplierState& mult,
                               double current_cost, const SolverOptions& opts) {
  const int T = static_cast<int>(controls.size());
  for (double alpha = 1.0; alpha >= opts.min_step;
       alpha *= opts.line_search_factor) {
    ForwardPassResult cand;
    cand.states.reserve(T + 1);
    cand.controls.reserve(T);
    cand.states.push_back(states.front());
    bool finite = true;
    for (int k = 0; k < T && finite; ++k) {
      Vec u = controls[k] + alpha * bp.feedforward[k] +
              bp.gains[k] * (cand.states[k] - states[k]);
      Vec next = problem.step(cand.states[k], u, k);
      finite = next.allFinite() && u.allFinite();
      cand.controls.push_back(std::move(u));
      cand.states.push_back(std::move(next));
    }
    if (!finite) continue;
    cand.cost = augmented_objective(problem, cand.states, cand.controls, mult);
    if (std::isfinite(cand.cost) && cand.cost < current_cost) {
      cand.step = alpha;
      return cand;
    }
  }
  return {states, controls, current_cost, 0.0};
}

// --- projection polish ---------------------------------------------------------

namespace {

struct ActiveRow {
  int step;  // T for terminal
  int row;
};

double overall_violation(const ControlProblem& problem,
                         const StateSequence& states,
                         const ControlSequence& controls) {
  return max_violation(problem, states, controls);
}

// Residuals of the active rows along a trajectory.
Vec active_residual(const ControlProblem& problem, const StateSequence& states,
                    const ControlSequence& controls,
                    const std::vector<ActiveRow>& active) {
  const int T = static_cast<int>(controls.size());
  std::vector<Vec> stage(T);
  Vec terminal;
  Vec r(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto& row = active[a];
    if (row.step == T) {
      if (terminal.size() == 0) terminal = problem.terminal_constraints(states[T]);
      r[a] = terminal[row.row];
    } else {
      if (stage[row.step].size() == 0) {
        stage[row.step] =
            problem.stage_constraints(states[row.step], controls[row.step],
                                      row.step);
      }
      r[a] = stage[row.step][row.row];
    }
  }
  return r;
}

// d(active rows)/dU via forward state sensitivities S_k = dx_k/dU. When
// `hessian` is given it also receives the Gauss-Newton Hessian of the cost
// with respect to U.
Mat active_jacobian(const ControlProblem& problem, const StateSequence& states,
                    const ControlSequence& controls,
                    const std::vector<ActiveRow>& active,
                    Mat* hessian = nullptr) {
  const int T = static_cast<int>(controls.size());
  const int n = problem.state_dim(), m = problem.control_dim();
  Mat J = Mat::Zero(static_cast<Eigen::Index>(active.size()), T * m);
  Mat S = Mat::Zero(n, T * m);
  if (hessian != nullptr) *hessian = Mat::Zero(T * m, T * m);
  Mat A, B, jx, ju;
  std::size_t next = 0;
  // `active` is sorted by step.
  for (int k = 0; k <= T; ++k) {
    const bool has_rows = next < active.size() && active[next].step == k;
    if (k == T) {
      if (has_rows) {
        problem.terminal_constraint_jacobian(states[T], jx);
        for (; next < active.size(); ++next) {
          J.row(next) = jx.row(active[next].row) * S;
        }
      }
      if (hessian != nullptr) {
        const auto e = problem.terminal_expansion(states[T]);
        const Mat lS = e.lxx * S;
        hessian->noalias() += S.transpose() * lS;
      }
      break;
    }
    if (has_rows) {
      problem.stage_constraint_jacobians(states[k], controls[k], k, jx, ju);
      for (; next < active.size() && active[next].step == k; ++next) {
        const int r = active[next].row;
        J.row(next) = jx.row(r) * S;
        J.block(next, k * m, 1, m) += ju.row(r);
      }
    }
    if (hessian != nullptr) {
      // S_k only depends on u_0..u_{k-1}.
      const int w = k * m;
      const auto e = problem.running_expansion(states[k], controls[k], k);
      Mat& H = *hessian;
      if (w > 0) {
        const auto Sk = S.leftCols(w);
        const Mat lS = e.lxx * Sk;
        H.topLeftCorner(w, w).noalias() += Sk.transpose() * lS;
        const Mat cross = e.lux * Sk;  // m x w
        H.block(w, 0, m, w) += cross;
        H.block(0, w, w, m) += cross.transpose();
      }
      H.block(w, w, m, m) += e.luu;
    }
    problem.dynamics_jacobians(states[k], controls[k], k, A, B);
    if (k > 0) S.leftCols(k * m) = (A * S.leftCols(k * m)).eval();
    S.middleCols(k * m, m) = B;
  }
  return J;
}

}  // namespace

PolishResult projection_polish(const ControlProblem& problem,
                               const StateSequence& states,
                               const ControlSequence& controls,
                               const MultiplierState& mult,
                               const SolverOptions& opts) {
  const int T = static_cast<int>(controls.size());
  const int m = problem.control_dim();
  PolishResult out;
  out.states = states;
  out.controls = controls;
  out.multipliers = mult;
  out.violation_before = overall_violation(problem, states, controls);
  out.violation_after = out.violation_before;

  const double threshold = opts.active_set_factor * opts.constraint_tolerance;
  auto is_active = [&](double g, double lambda, ConstraintKind kind) {
    if (kind == ConstraintKind::Equality) return true;
    return g > 0.0 || (lambda > 0.0 && g >= -threshold);
  };

  std::vector<ActiveRow> candidates;
  const auto& sk = problem.stage_row_kinds();
  for (int k = 0; k < T && !sk.empty(); ++k) {
    const Vec g = problem.stage_constraints(states[k], controls[k], k);
    for (Eigen::Index r = 0; r < g.size(); ++r) {
      const double lambda =
          mult.stage_lambda.empty() ? 0.0 : mult.stage_lambda[k][r];
      if (is_active(g[r], lambda, sk[r])) {
        candidates.push_back({k, static_cast<int>(r)});
      }
    }
  }
  const auto& tk = problem.terminal_row_kinds();
  if (!tk.empty()) {
    const Vec g = problem.terminal_constraints(states[T]);
    for (Eigen::Index r = 0; r < g.size(); ++r) {
      const double lambda =
          mult.terminal_lambda.size() > 0 ? mult.terminal_lambda[r] : 0.0;
      if (is_active(g[r], lambda, tk[r])) {
        candidates.push_back({T, static_cast<int>(r)});
      }
    }
  }
  if (candidates.empty()) return out;

  // Rows that the controls cannot move (e.g. state-only rows at k = 0).
  std::vector<ActiveRow> active;
  {
    const Mat J = active_jacobian(problem, states, controls, candidates);
    for (std::size_t a = 0; a < candidates.size(); ++a) {
      if (J.row(a).cwiseAbs().maxCoeff() > 1e-12) active.push_back(candidates[a]);
    }
  }
  out.active_rows = static_cast<int>(active.size());
  if (active.empty()) return out;

  auto kind_of = [&](const ActiveRow& row) {
    return row.step == T ? tk[row.row] : sk[row.row];
  };
  auto lambda_of = [&](MultiplierState& s, const ActiveRow& row) -> double& {
    return row.step == T ? s.terminal_lambda[row.row]
                         : s.stage_lambda[row.step][row.row];
  };
  auto merit = [&](const Vec& res) {
    // Inequality rows below zero are already satisfied.
    double worst = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double v = kind_of(active[a]) == ConstraintKind::Equality
                           ? std::abs(res[a])
                           : std::max(res[a], 0.0);
      worst = std::max(worst, v);
    }
    return worst;
  };

  StateSequence xs = states;
  ControlSequence us = controls;
  MultiplierState ms = mult;
  if (ms.empty() || ms.stage_lambda.size() != static_cast<std::size_t>(T)) {
    ms = MultiplierState::initial(problem, opts.penalty_initial);
  }
  Vec r = active_residual(problem, xs, us, active);
  double current = merit(r);

  // The Hessian is formed once, at the first iterate.
  Mat H;
  Eigen::LLT<Mat> hl;
  for (int it = 0; it < opts.max_polish_steps; ++it) {
    if (current <= opts.polish_tolerance) break;
    const Mat J = active_jacobian(problem, xs, us, active, it == 0 ? &H : nullptr);
    Eigen::ColPivHouseholderQR<Mat> qr(J.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < J.rows()) {
      out.rank_deficient = true;
      out.states = states;
      out.controls = controls;
      return out;
    }
    // Step in the cost-Hessian metric: dU = -H^-1 J' y with J H^-1 J' y = r.
    // The gradient then changes by -J' y, which the multipliers absorb.
    if (it == 0) {
      H.diagonal().array() += opts.regularization_min;
      hl.compute(H);
    }
    Mat HinvJt;
    if (hl.info() == Eigen::Success) {
      HinvJt = hl.solve(J.transpose());
    } else {
      HinvJt = J.transpose();  // fall back to the minimum-norm step
    }
    const Mat M = J * HinvJt;
    const Vec y = M.ldlt().solve(r);
    const Vec dU = -HinvJt * y;
    if (!dU.allFinite()) break;

    bool accepted = false;
    for (double alpha = 1.0; alpha >= 1e-3; alpha *= 0.5) {
      ControlSequence trial = us;
      for (int k = 0; k < T; ++k) trial[k] += alpha * dU.segment(k * m, m);
      StateSequence trial_states;
      try {
        trial_states = simulate(problem, trial);
      } catch (const DivergenceError&) {
        continue;
      }
      const Vec trial_r = active_residual(problem, trial_states, trial, active);
      const double trial_merit = merit(trial_r);
      if (trial_merit < current) {
        us = std::move(trial);
        xs = std::move(trial_states);
        r = trial_r;
        current = trial_merit;
        if (hl.info() == Eigen::Success) {
          for (std::size_t a = 0; a < active.size(); ++a) {
            double& l = lambda_of(ms, active[a]);
            l += alpha * y[static_cast<Eigen::Index>(a)];
            if (kind_of(active[a]) == ConstraintKind::Inequality) {
              l = std::max(l, 0.0);
            }
          }
        }
        accepted = true;
        break;
      }
    }
    ++out.steps;
    if (!accepted) break;
  }

  const double after = overall_violation(problem, xs, us);
  if (after < out.violation_before) {
    out.states = std::move(xs);
    out.controls = std::move(us);
    out.multipliers = std::move(ms);
    out.changed = true;
    out.violation_after = after;
  }
  return out;
}

// --- costates --------------------------------------------------------------------

std::vector<Vec> compute_costates(const ControlProblem& problem,
                                  const StateSequence& states,
                                  const ControlSequence& controls,
                                  const MultiplierState& mult) {
  const int T = static_cast<int>(controls.size());
  std::vector<Vec> xi(T);
  if (T == 0) return xi;
  Mat A, B, jx, ju;
  Vec next = problem.terminal_expansion(states[T]).lx;
  if (!problem.terminal_row_kinds().empty()) {
    problem.terminal_constraint_jacobian(states[T], jx);
    next += jx.transpose() * mult.terminal_lambda;
  }
  xi[T - 1] = next;
  for (int k = T - 1; k >= 1; --k) {
    Vec grad = problem.running_expansion(states[k], controls[k], k).lx;
    problem.dynamics_jacobians(states[k], controls[k], k, A, B);
    grad += A.transpose() * xi[k];
    if (!problem.stage_row_kinds().empty()) {
      problem.stage_constraint_jacobians(states[k], controls[k], k, jx, ju);
      grad += jx.transpose() * mult.stage_lambda[k];
    }
    xi[k - 1] = std::move(grad);
  }
  return xi;
}

// --- solve ----------------------------------------------------------------------

namespace {

struct InnerStats {
  int iterations = 0;
  int regularization_increases = 0;
  double last_gradient = 0.0;
};

void minimize_augmented(const ControlProblem& problem, StateSequence& states,
                        ControlSequence& controls, const MultiplierState& mult,
                        const SolverOptions& opts, double& regularization,
                        InnerStats& stats, int outer,
                        const std::chrono::steady_clock::time_point start,
                        bool& out_of_time) {
  double cost = augmented_objective(problem, states, controls, mult);
  if (!std::isfinite(cost)) {
    std::ostringstream msg;
    msg << "non-finite augmented objective at outer iteration " << outer;
    throw DivergenceError(msg.str());
  }
  int stalled = 0;
  for (int it = 0; it < opts.max_inner_iterations; ++it) {
    if (opts.time_budget_ms && elapsed_ms(start) > *opts.time_budget_ms) {
      out_of_time = true;
      return;
    }
    const LqData data = expand(problem, states, controls, mult);
    const auto bp = backward_pass(data, regularization, opts);
    regularization = bp.regularization;
    stats.regularization_increases += bp.regularization_increases;
    stats.last_gradient = bp.max_gradient;

    if (bp.max_gradient <= opts.gradient_tolerance) return;
    if (bp.expected_decrease(1.0) <= 1e-14 * (1.0 + std::abs(cost))) return;

    auto fp = forward_pass(problem, states, controls, bp, mult, cost, opts);
    ++stats.iterations;
    if (fp.step == 0.0) {
      regularization *= opts.regularization_factor;
      ++stats.regularization_increases;
      if (regularization > opts.regularization_max) return;
      continue;
    }
    const double decrease = cost - fp.cost;
    states = std::move(fp.states);
    controls = std::move(fp.controls);
    cost = fp.cost;
    if (!std::isfinite(cost)) {
      std::ostringstream msg;
      msg << "non-finite augmented objective at outer iteration " << outer
          << ", inner iteration " << it;
      throw DivergenceError(msg.str());
    }
    regularization = std::max(regularization / opts.regularization_factor,
                              opts.regularization_min);
    stalled = decrease < opts.cost_tolerance * (1.0 + std::abs(cost))
                  ? stalled + 1
                  : 0;
    if (stalled >= 10) return;
  }
}

// max |lambda g| / (1 + lambda) over inequality rows.
double complementarity(const Vec& g, const Vec& lambda,
                       const std::vector<ConstraintKind>& kinds) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    if (kinds[r] == ConstraintKind::Equality) continue;
    worst = std::max(worst, std::abs(lambda[r] * g[r]) / (1.0 + lambda[r]));
  }
  return worst;
}

double max_penalty(const MultiplierState& mult) {
  double worst = 0.0;
  for (const auto& p : mult.stage_penalty) {
    if (p.size() > 0) worst = std::max(worst, p.maxCoeff());
  }
  if (mult.terminal_penalty.size() > 0) {
    worst = std::max(worst, mult.terminal_penalty.maxCoeff());
  }
  return worst;
}

std::string history_trace(const std::vector<OuterRecord>& history) {
  std::ostringstream out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << "\n  outer " << i << ": objective " << history[i].objective
        << ", violation " << history[i].violation << ", max penalty "
        << history[i].max_penalty;
  }
  return out.str();
}

}  // namespace

SolveResult solve(const ControlProblem& problem, const SolverOptions& opts,
                  const std::optional<ControlSequence>& initial_controls,
                  const MultiplierState* warm_multipliers) {
  opts.validate();
  const auto start = std::chrono::steady_clock::now();
  const int T = problem.horizon();
  const int m = problem.control_dim();

  ControlSequence controls;
  if (initial_controls) {
    if (static_cast<int>(initial_controls->size()) != T) {
      throw InputError("solve: initial controls must have T entries");
    }
    for (const auto& u : *initial_controls) {
      if (u.size() != m) throw InputError("solve: initial control has wrong size");
    }
    controls = *initial_controls;
  } else {
    controls.assign(T, Vec::Zero(m));
  }
  StateSequence states = simulate(problem, controls);

  MultiplierState mult = MultiplierState::initial(problem, opts.penalty_initial);
  if (warm_multipliers != nullptr && !warm_multipliers->empty()) {
    if (warm_multipliers->stage_lambda.size() != mult.stage_lambda.size() ||
        warm_multipliers->terminal_lambda.size() !=
            mult.terminal_lambda.size()) {
      throw InputError("solve: warm-start multipliers have the wrong shape");
    }
    mult.stage_lambda = warm_multipliers->stage_lambda;
    mult.terminal_lambda = warm_multipliers->terminal_lambda;
    if (warm_multipliers->stage_penalty.size() == mult.stage_penalty.size()) {
      mult.stage_penalty = warm_multipliers->stage_penalty;
      mult.terminal_penalty = warm_multipliers->terminal_penalty;
    }
  }

  const auto& sk = problem.stage_row_kinds();
  const auto& tk = problem.terminal_row_kinds();

  SolveResult result;
  double regularization = opts.regularization_initial;
  InnerStats stats;

  struct Best {
    StateSequence states;
    ControlSequence controls;
    MultiplierState mult;
    double violation = std::numeric_limits<double>::infinity();
  } best;

  bool out_of_time = false;
  for (int outer = 0; outer < opts.max_outer_iterations; ++outer) {
    const int before = stats.iterations;
    try {
      minimize_augmented(problem, states, controls, mult, opts, regularization,
                         stats, outer, start, out_of_time);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) +
                            history_trace(result.history));
    }

    std::vector<Vec> stage_values(T);
    for (int k = 0; k < T; ++k) {
      stage_values[k] = problem.stage_constraints(states[k], controls[k], k);
    }
    const Vec terminal_values = problem.terminal_constraints(states[T]);
    double viol = violation(terminal_values, tk);
    for (int k = 0; k < T; ++k) {
      viol = std::max(viol, violation(stage_values[k], sk));
    }

    mult = update_multipliers(mult, stage_values, terminal_values, sk, tk, opts);
    double comp = complementarity(terminal_values, mult.terminal_lambda, tk);
    for (int k = 0; k < T; ++k) {
      comp = std::max(comp, complementarity(stage_values[k],
                                            mult.stage_lambda[k], sk));
    }
    const double obj = objective(problem, states, controls);
    if (!std::isfinite(obj)) {
      throw DivergenceError("non-finite objective" +
                            history_trace(result.history));
    }
    result.history.push_back({obj, viol, comp, stats.last_gradient,
                              max_penalty(mult), stats.iterations - before});
    result.outer_iterations = outer + 1;

    if (viol <= best.violation) {
      best = {states, controls, mult, viol};
    }
    if (viol <= opts.constraint_tolerance &&
        comp <= opts.complementarity_tolerance &&
        stats.last_gradient <= opts.stationarity_tolerance) {
      result.converged = !out_of_time;
      break;
    }
    if (out_of_time ||
        (opts.time_budget_ms && elapsed_ms(start) > *opts.time_budget_ms)) {
      result.budget_exceeded = true;
      break;
    }
  }

  if (!result.converged) {
    if (result.outer_iterations >= opts.max_outer_iterations) {
      result.budget_exceeded = true;
    }
    states = std::move(best.states);
    controls = std::move(best.controls);
    mult = std::move(best.mult);
  } else if (opts.projection_polish) {
    auto polish = projection_polish(problem, states, controls, mult, opts);
    result.polished = polish.changed;
    result.polish_warning = polish.rank_deficient;
    if (polish.changed) {
      states = std::move(polish.states);
      controls = std::move(polish.controls);
      mult = std::move(polish.multipliers);
    }
  }

  result.inner_iterations = stats.iterations;
  result.regularization_increases = stats.regularization_increases;
  result.costates = compute_costates(problem, states, controls, mult);
  result.multipliers = std::move(mult);
  result.max_violation = max_violation(problem, states, controls);
  result.objective = objective(problem, states, controls);

  Trajectory& traj = result.trajectory;
  traj.states = std::move(states);
  traj.controls = std::move(controls);
  traj.step_violation.assign(T + 1, 0.0);
  for (int k = 0; k < T; ++k) {
    traj.step_violation[k] = violation(
        problem.stage_constraints(traj.states[k], traj.controls[k], k), sk);
  }
  traj.step_violation[T] =
      violation(problem.terminal_constraints(traj.states[T]), tk);
  traj.potential_value = result.objective;
  problem.annotate(traj);

  result.solve_ms = elapsed_ms(start);
  return result;
}

}  // namespace dpgame
