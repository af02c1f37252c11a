#include "dagm/agm.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dagm/error.hpp"

namespace dagm {

double coefficient_c(long k) noexcept {
  const double t0 = theta(k);
  const double t1 = theta(k + 1);
  return t1 / (t1 * t1 - t0 * t0);
}

double coefficient_A(long k) noexcept {
  const double t = theta(k);
  return coefficient_c(k) * t * t;
}

double gradient_weight(long k, double h, double beta) {
  if (k < 1) throw InvalidArgument("gradient weight is undefined at k = 0");
  return std::pow(2.0 * theta(k) * h, -beta);
}

double AgmState::gradient_weight() const { return dagm::gradient_weight(k, h, beta); }

Vector AgmState::direction() const { return gradient_weight() * grad + lap; }

Vector AgmState::x_plus() const { return X - (0.5 * s) * direction(); }

Vector AgmState::z_next() const { return Z - (s * theta()) * direction(); }

namespace {

void check_parameters(double h, double beta) {
  if (!(h > 0.0)) throw InvalidArgument("h must be positive");
  if (!(beta > 0.0 && beta < 2.0)) throw InvalidArgument("beta must lie in (0, 2)");
}

void refresh(AgmState& state, const SeparableObjective& objective, const AgentGraph& graph) {
  state.f = objective.value(state.X);
  objective.gradient(state.X, state.grad);
  apply_lifted_laplacian(graph, objective.dim(), state.X, state.lap);
}

// phi_k(X_k) = (2 theta_k h)^{-beta} (F(X_k) - F*) + 1/2 Xbar^T L~ Xbar; L~ X* = 0 so Xbar^T L~ Xbar = X^T L~ X.
double phi(const AgmState& s, double f_star) {
  return s.gradient_weight() * (s.f - f_star) + 0.5 * s.X.dot(s.lap);
}

double r_value(double weight, const Vector& grad_star, const AgmState& next) {
  const Vector g = weight * grad_star;
  const Vector diff = g - weight * next.grad - next.lap;
  return -g.squaredNorm() + 2.0 * g.dot(diff);
}

}  // namespace

AgmState init(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0, double h, double beta,
              double s1) {
  check_parameters(h, beta);
  if (x0.size() != objective.stacked_size()) throw DimensionError("X0 has wrong length");
  if (graph.agents() != objective.agents()) throw DimensionError("graph and objective disagree on agent count");
  if (!(s1 >= 0.0)) throw InvalidArgument("step sizes must be non-negative");
  AgmState state;
  state.k = 1;
  state.X = x0;
  state.Z = x0;
  state.s = s1;
  state.h = h;
  state.beta = beta;
  refresh(state, objective, graph);
  return state;
}

void step(AgmState& state, const SeparableObjective& objective, const AgentGraph& graph, double s_next) {
  if (!(s_next >= 0.0)) throw InvalidArgument("step sizes must be non-negative");
  const Vector g = state.direction();
  if (!g.allFinite()) throw DivergenceError(fmt::format("non-finite direction at k = {}", state.k), state.k, kNull);
  const double t0 = state.theta();
  const double t1 = theta(state.k + 1);
  const double rho = (t0 * t0) / (t1 * t1);
  const Vector x_plus = state.X - (0.5 * state.s) * g;
  state.Z -= (state.s * t0) * g;
  // rho X^+ + (1 - rho) Z_{k+1}, arranged so that X^+ = Z_{k+1} is reproduced exactly.
  state.X = state.Z + rho * (x_plus - state.Z);
  state.k += 1;
  state.s = s_next;
  refresh(state, objective, graph);
  if (!state.X.allFinite() || !std::isfinite(state.f)) {
    throw DivergenceError(fmt::format("non-finite iterate at k = {}", state.k), state.k, kNull);
  }
}

MomentumIterate momentum_form_step(long k, const Vector& x, const Vector& p, const Vector& x_star, double h,
                                   double beta, const SeparableObjective& objective, const AgentGraph& graph) {
  check_parameters(h, beta);
  if (k < 1) throw InvalidArgument("momentum form starts at k = 1");
  const Vector grad = objective.gradient(x);
  const Vector lap = apply_lifted_laplacian(graph, objective.dim(), x);
  const double kh = static_cast<double>(k) * h;
  const double kk = static_cast<double>(k);
  MomentumIterate next;
  next.P = p - h * (std::pow(kh, 1.0 - beta) * grad + kh * lap);
  const Vector bracket = x - (0.5 * h * h) * (std::pow(kh, -beta) * grad + lap);
  next.X = (kk * kk) / ((kk + 1) * (kk + 1)) * bracket + (2 * kk + 1) / ((kk + 1) * (kk + 1)) * (x_star + 0.5 * next.P);
  return next;
}

std::string to_string(StepCase c) {
  switch (c) {
    case StepCase::initial: return "initial";
    case StepCase::w_nonpos_r_nonneg: return "w<=0;r>=0";
    case StepCase::w_nonpos_r_neg: return "w<=0;r<0";
    case StepCase::w_pos_r_nonneg: return "w>0;r>=0";
    case StepCase::w_pos_r_neg: return "w>0;r<0";
    case StepCase::fixed: return "fixed";
  }
  return "?";
}

double smoothness_cap(long n, double h, double beta, const SeparableObjective& objective, const AgentGraph& graph) {
  if (n < 1) throw InvalidArgument("smoothness cap is defined for n >= 1");
  const double scaled = std::pow(static_cast<double>(n) * h, -beta) * objective.smoothness();
  return 1.0 / std::max(graph.spectrum().lambda_max, scaled);
}

StepDiagnostics compute_step_diagnostics(const AgmState& prev, const AgmState& next, double f_star,
                                         const Vector& grad_star) {
  if (next.k != prev.k + 1) throw InvalidArgument("diagnostics need consecutive iterates");
  const Vector g_prev = prev.direction();
  const Vector g_next = next.direction();
  StepDiagnostics d;
  d.k = prev.k;
  d.a = phi(prev, f_star) - phi(next, f_star) - g_next.dot(prev.X - next.X);
  d.b = (g_prev - g_next).squaredNorm();
  d.w = g_next.dot(g_prev);
  d.a_tilde = d.a + 0.5 * prev.s * d.w;
  d.b_tilde = g_prev.squaredNorm() + g_next.squaredNorm();
  d.r = r_value(next.gradient_weight(), grad_star, next);
  d.step_case = classify(d.w, d.r);
  return d;
}

StepDiagnostics initial_diagnostics(const AgmState& first, double f_star, const Vector& grad_star) {
  if (first.k != 1) throw InvalidArgument("initial diagnostics need the state at k = 1");
  // X_0 = X_1, so every difference in a_1 vanishes and both terms of b_1 coincide.
  const Vector g = first.direction();
  const double p = phi(first, f_star);
  StepDiagnostics d;
  d.k = 0;
  d.a = p - p - g.dot(first.X - first.X);
  d.b = 2.0 * g.squaredNorm();
  d.w = g.squaredNorm();
  d.a_tilde = d.a;
  d.b_tilde = d.b;
  d.r = r_value(first.gradient_weight(), grad_star, first);
  d.step_case = StepCase::initial;
  return d;
}

StepCase classify(double w, double r) {
  if (w <= 0.0) return r >= 0.0 ? StepCase::w_nonpos_r_nonneg : StepCase::w_nonpos_r_neg;
  return r >= 0.0 ? StepCase::w_pos_r_nonneg : StepCase::w_pos_r_neg;
}

double case_bound(StepCase c, const StepDiagnostics& diag, double A_k, double theta_next) {
  switch (c) {
    case StepCase::w_nonpos_r_nonneg: return 4.0 * diag.a / diag.b;
    case StepCase::w_nonpos_r_neg: return 4.0 * A_k * diag.a / (A_k * diag.b + theta_next * (-diag.r));
    case StepCase::w_pos_r_nonneg: return 4.0 * diag.a_tilde / diag.b_tilde;
    case StepCase::w_pos_r_neg:
      return 4.0 * A_k * diag.a_tilde / (A_k * diag.b_tilde + theta_next * (-diag.r));
    default: throw InvalidArgument("no case bound for " + to_string(c));
  }
}

double select_stepsize(StepDiagnostics& diag, double s_k, double A_k, double theta_next, double cap) {
  diag.step_case = classify(diag.w, diag.r);
  diag.cap_smooth = cap;
  // A zero denominator (b = 0) gives +inf for positive a, which the cap absorbs.
  diag.bound = case_bound(diag.step_case, diag, A_k, theta_next);
  double s = std::min(diag.bound, cap);
  diag.fallback = false;
  if (!(diag.bound > 0.0) || s < s_k) {
    s = s_k > 0.0 ? std::min(s_k, cap) : cap;
    diag.fallback = true;
  }
  diag.chosen = s;
  diag.monotonicity_ok = s >= s_k;
  return s;
}

LyapunovRecord lyapunov(const AgmState& state, const ConsensusOptimum& optimum) {
  LyapunovRecord rec;
  rec.k = state.k;
  if (!(state.s > 0.0)) return rec;
  const double A = state.A();
  const Vector g = state.direction();
  rec.function_term = 2.0 * A * state.gradient_weight() * (state.f - optimum.f_star);
  rec.consensus_term = A * state.X.dot(state.lap);
  rec.step_penalty = -A * 0.5 * state.s * g.squaredNorm();
  rec.distance_term = (state.z_next() - optimum.stacked).squaredNorm() / state.s;
  rec.value = rec.function_term + rec.consensus_term + rec.step_penalty + rec.distance_term;
  return rec;
}

LyapunovRecord lyapunov_initial(const Vector& x0, const ConsensusOptimum& optimum, double s_ref) {
  if (!(s_ref > 0.0)) throw InvalidArgument("s_ref must be positive");
  LyapunovRecord rec;
  rec.k = 0;
  rec.function_term = 0.0;
  rec.consensus_term = 0.0;
  rec.step_penalty = 0.0;
  rec.distance_term = (x0 - optimum.stacked).squaredNorm() / s_ref;
  rec.value = rec.distance_term;
  return rec;
}

std::string to_string(OracleMode mode) { return mode == OracleMode::exact ? "exact" : "practical"; }

OracleMode oracle_mode_from_string(const std::string& name) {
  if (name == "exact") return OracleMode::exact;
  if (name == "practical") return OracleMode::practical;
  throw InvalidArgument("unknown oracle mode '" + name + "'");
}

namespace {

TraceRecord state_record(const AgmState& state, const SeparableObjective& objective,
                         const ConsensusOptimum& optimum) {
  TraceRecord rec;
  rec.k = state.k;
  rec.f_gap_plus = objective.value(state.x_plus()) - optimum.f_star;
  rec.f_gap = state.f - optimum.f_star;
  rec.grad_norm = state.grad.norm();
  rec.laplacian_norm = state.lap.norm();
  rec.step = state.s;
  rec.lyapunov = lyapunov(state, optimum).value;
  return rec;
}

TraceRecord initial_record(const AgmState& first, const ConsensusOptimum& optimum, double s_ref) {
  TraceRecord rec;
  rec.k = 0;
  rec.f_gap_plus = first.f - optimum.f_star;
  rec.f_gap = rec.f_gap_plus;
  rec.grad_norm = first.grad.norm();
  rec.laplacian_norm = first.lap.norm();
  rec.step = 0.0;
  rec.lyapunov = lyapunov_initial(first.X, optimum, s_ref).value;
  return rec;
}

RunTrace start_trace(const std::string& algorithm, const SeparableObjective& objective, const Vector& x0,
                     const ConsensusOptimum& optimum, const AgmRunOptions& options) {
  if (options.iters < 0) throw InvalidArgument("iteration count must be non-negative");
  RunTrace trace;
  trace.algorithm = algorithm;
  trace.problem = objective.name();
  trace.f_star = optimum.f_star;
  trace.initial_distance_sq = (x0 - optimum.stacked).squaredNorm();
  trace.h = options.h;
  trace.beta = options.beta;
  return trace;
}

bool blown_up(double gap, double initial_gap, double factor) {
  return !std::isfinite(gap) || std::abs(gap) > factor * std::max(std::abs(initial_gap), 1e-12);
}

void mark_diverged(RunTrace& trace, long k) {
  trace.diverged = true;
  trace.divergence_index = k;
}

}  // namespace

RunTrace fixed_step_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                        const ConsensusOptimum& optimum, const AgmRunOptions& options) {
  const double s = std::isnan(options.step) ? options.h * options.h : options.step;
  if (!(s > 0.0)) throw InvalidArgument("fixed step must be positive");
  RunTrace trace = start_trace("dist-agm-fixed", objective, x0, optimum, options);
  trace.s_ref = s;

  AgmState state = init(objective, graph, x0, options.h, options.beta, s);
  trace.records.push_back(initial_record(state, optimum, s));
  const double gap0 = trace.records.front().f_gap;

  for (long k = 1; k <= options.iters; ++k) {
    if (k > 1) {
      try {
        step(state, objective, graph, s);
      } catch (const DivergenceError&) {
        mark_diverged(trace, k);
        break;
      }
    }
    TraceRecord rec = state_record(state, objective, optimum);
    rec.step_case = to_string(StepCase::fixed);
    trace.records.push_back(rec);
    if (blown_up(rec.f_gap, gap0, options.divergence_factor) ||
        blown_up(rec.f_gap_plus, gap0, options.divergence_factor)) {
      mark_diverged(trace, k);
      break;
    }
  }
  return trace;
}

RunTrace adaptive_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                      const ConsensusOptimum& optimum, const AgmRunOptions& options) {
  RunTrace trace = start_trace("dist-agm-adaptive", objective, x0, optimum, options);
  const bool practical = options.oracle == OracleMode::practical;
  trace.approximate_oracle = practical;
  const Vector grad_star = practical ? Vector::Zero(objective.stacked_size()) : optimum.grad_at_opt;
  if (grad_star.size() != objective.stacked_size()) throw DimensionError("oracle gradient has wrong length");

  AgmState state = init(objective, graph, x0, options.h, options.beta, 0.0);

  // k = 0: s_1 is positive (the cap) when r_1 >= 0 and zero otherwise.
  StepDiagnostics diag = initial_diagnostics(state, optimum.f_star, grad_star);
  diag.cap_smooth = smoothness_cap(1, options.h, options.beta, objective, graph);
  diag.chosen = diag.r >= 0.0 ? diag.cap_smooth : 0.0;
  diag.bound = diag.chosen;
  state.s = diag.chosen;
  trace.s_ref = state.s > 0.0 ? state.s : diag.cap_smooth;

  trace.records.push_back(initial_record(state, optimum, trace.s_ref));
  const double gap0 = trace.records.front().f_gap;

  for (long k = 1; k <= options.iters; ++k) {
    TraceRecord rec = state_record(state, objective, optimum);
    rec.step_case = to_string(diag.step_case);
    rec.w = diag.w;
    rec.r = diag.r;
    rec.monotonicity_ok = diag.monotonicity_ok;
    rec.fallback = diag.fallback;
    trace.records.push_back(rec);
    if (blown_up(rec.f_gap, gap0, options.divergence_factor) ||
        blown_up(rec.f_gap_plus, gap0, options.divergence_factor)) {
      mark_diverged(trace, k);
      break;
    }
    if (k == options.iters) break;

    const AgmState prev = state;
    try {
      step(state, objective, graph, prev.s);
    } catch (const DivergenceError&) {
      mark_diverged(trace, k + 1);
      break;
    }
    diag = compute_step_diagnostics(prev, state, optimum.f_star, grad_star);
    const double cap = smoothness_cap(state.k, options.h, options.beta, objective, graph);
    state.s = select_stepsize(diag, prev.s, prev.A(), state.theta(), cap);
  }
  return trace;
}

}  // namespace dagm
