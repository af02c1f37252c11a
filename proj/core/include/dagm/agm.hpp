#pragma once

#include <string>

#include "dagm/graph.hpp"
#include "dagm/objective.hpp"
#include "dagm/trace.hpp"
#include "dagm/types.hpp"

namespace dagm {

inline double theta(long k) noexcept { return 0.5 * static_cast<double>(k); }
/// c_k = theta_{k+1} / (theta_{k+1}^2 - theta_k^2) = 2(k+1)/(2k+1).
double coefficient_c(long k) noexcept;
/// A_k = c_k theta_k^2.
double coefficient_A(long k) noexcept;

/// Iterate of the rate-matching scheme at index k >= 1.
///
/// Holds X_k, Z_k and s_k together with F(X_k), grad F(X_k) and L~X_k, which
/// are evaluated once when the iterate is formed and reused by the update,
/// the step-size diagnostics and the Lyapunov value.
struct AgmState {
  long k = 1;
  Vector X;
  Vector Z;
  double s = 0.0;
  double h = 1.0;
  double beta = 0.1;

  double f = 0.0;
  Vector grad;
  Vector lap;

  double theta() const noexcept { return dagm::theta(k); }
  double c() const noexcept { return coefficient_c(k); }
  double A() const noexcept { return coefficient_A(k); }
  /// (2 theta_k h)^{-beta}.
  double gradient_weight() const;
  /// G_k = (2 theta_k h)^{-beta} grad F(X_k) + L~ X_k.
  Vector direction() const;
  /// X_k^+ = X_k - (s_k/2) G_k.
  Vector x_plus() const;
  /// Z_{k+1} = Z_k - s_k theta_k G_k.
  Vector z_next() const;
};

/// (2 theta h)^{-beta} for an arbitrary index.
double gradient_weight(long k, double h, double beta);

/// The k = 0 block: X_1 = X_0, Z_1 = Z_0 = X_0 (s_0 = 0). Returns the state at
/// k = 1 carrying s_1. Throws InvalidArgument for beta outside (0, 2) or h <= 0.
AgmState init(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0, double h, double beta,
              double s1 = 0.0);

/// Advances k -> k+1 using s_k, then installs s_next as s_{k+1}.
/// Throws DivergenceError when G_k or the new iterate is not finite.
void step(AgmState& state, const SeparableObjective& objective, const AgentGraph& graph, double s_next);

/// The fixed-step scheme written as one line in momentum form, with s = h^2 and
/// P_k = 2 (Z_k - X*):
///   P_{k+1} = P_k - h [(kh)^{1-beta} grad F(X_k) + kh L~X_k]
///   X_{k+1} = k^2/(k+1)^2 [X_k - (h^2/2)((kh)^{-beta} grad F(X_k) + L~X_k)]
///             + (2k+1)/(k+1)^2 (X* + P_{k+1}/2)
/// Used as a cross-check of `step`.
struct MomentumIterate {
  Vector X;
  Vector P;
};
MomentumIterate momentum_form_step(long k, const Vector& x, const Vector& p, const Vector& x_star, double h,
                                   double beta, const SeparableObjective& objective, const AgentGraph& graph);

enum class StepCase {
  initial,             // k = 0 rule for s_1
  w_nonpos_r_nonneg,   // 4a/b
  w_nonpos_r_neg,      // 4A a / (A b + theta (-r))
  w_pos_r_nonneg,      // 4a~/b~
  w_pos_r_neg,         // 4A a~ / (A b~ + theta (-r))
  fixed                // no controller
};
std::string to_string(StepCase c);

struct StepDiagnostics {
  long k = 0;  // diagnostics for the transition k -> k+1
  double a = 0.0;
  double b = 0.0;
  double a_tilde = 0.0;
  double b_tilde = 0.0;
  double w = 0.0;
  double r = 0.0;
  StepCase step_case = StepCase::initial;
  double cap_smooth = 0.0;
  double bound = 0.0;  // case bound before the cap
  double chosen = 0.0;
  bool monotonicity_ok = true;
  bool fallback = false;
};

/// 1 / max{lambda_max(L), (n h)^{-beta} L_f}: the smoothness cap for s_n.
double smoothness_cap(long n, double h, double beta, const SeparableObjective& objective, const AgentGraph& graph);

/// a_{k+1}, b_{k+1}, a~, b~, w, r for the transition prev (index k) -> next (index k+1).
/// `grad_star` is grad F(X*) (zero in practical mode).
StepDiagnostics compute_step_diagnostics(const AgmState& prev, const AgmState& next, double f_star,
                                         const Vector& grad_star);

/// The k = 0 quantities a_1, b_1, r_1 evaluated at X_0 = X_1 with theta_1.
StepDiagnostics initial_diagnostics(const AgmState& first, double f_star, const Vector& grad_star);

/// Case bound of the four-branch rule (ties: w <= 0 and r >= 0 branches).
double case_bound(StepCase c, const StepDiagnostics& diag, double A_k, double theta_next);
StepCase classify(double w, double r);

/// s_{k+1} = min(case bound, cap). If the bound is non-positive or would shrink
/// the step, falls back to min(s_k, cap) (or the cap when s_k = 0) and flags it.
/// Fills step_case, bound, chosen, monotonicity_ok and fallback in `diag`.
double select_stepsize(StepDiagnostics& diag, double s_k, double A_k, double theta_next, double cap);

struct LyapunovRecord {
  long k = 0;
  double value = kNull;
  double function_term = kNull;   // 2 A_k (2 theta_k h)^{-beta} (F(X_k) - F*)
  double consensus_term = kNull;  // A_k Xbar^T L~ Xbar
  double step_penalty = kNull;    // -A_k (s_k/2) ||G_k||^2
  double distance_term = kNull;   // ||Z_{k+1} - X*||^2 / s_k
};

/// V_k. The value is NaN when s_k = 0.
LyapunovRecord lyapunov(const AgmState& state, const ConsensusOptimum& optimum);
/// V'_0 = ||Z_1 - X*||^2 / s_ref (theta_0 = 0 removes the other terms).
LyapunovRecord lyapunov_initial(const Vector& x0, const ConsensusOptimum& optimum, double s_ref);

enum class OracleMode { exact, practical };
std::string to_string(OracleMode mode);
OracleMode oracle_mode_from_string(const std::string& name);

struct AgmRunOptions {
  double h = 1.0;
  double beta = 0.1;
  long iters = 1000;
  /// Fixed mode only: step used for k >= 1 (defaults to h^2 when NaN).
  double step = kNull;
  OracleMode oracle = OracleMode::exact;
  /// Stop as diverged when |F - F*| exceeds this multiple of the initial gap.
  double divergence_factor = 1e6;
};

/// Fixed step s for every k >= 1.
RunTrace fixed_step_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                        const ConsensusOptimum& optimum, const AgmRunOptions& options);

/// Step sizes from the four-case controller with the smoothness cap.
RunTrace adaptive_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                      const ConsensusOptimum& optimum, const AgmRunOptions& options);

}  // namespace dagm
