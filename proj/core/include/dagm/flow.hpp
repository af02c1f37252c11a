#pragma once

#include <vector>

#include "dagm/graph.hpp"
#include "dagm/objective.hpp"
#include "dagm/types.hpp"

namespace dagm {

/// Parameters of the second-order flow
///   X'' + (3/t) X' + t^{-beta} grad F(X) + k L~ X = 0.
struct FlowParams {
  double beta = 0.1;
  double k_gain = 1.0;
  double t0 = 1e-3;
  double dt = 1e-3;
  double horizon = 10.0;
  /// Store every n-th RK4 grid point (the first and last are always kept).
  long record_every = 1;

  void validate() const;
};

struct FlowState {
  double t = 0.0;
  Vector X;
  Vector V;  // dX/dt
};

struct FlowDerivative {
  Vector dX;
  Vector dV;
};

/// Right-hand side of the flow in stacked form. Throws InvalidArgument for t <= 0.
FlowDerivative flow_rhs(const FlowState& state, const FlowParams& params, const SeparableObjective& objective,
                        const AgentGraph& graph);

/// Same right-hand side assembled agent by agent: block i only uses
/// grad f_i(x_i) and the differences x_i - x_j over its neighbors.
FlowDerivative flow_rhs_per_agent(const FlowState& state, const FlowParams& params,
                                  const SeparableObjective& objective, const AgentGraph& graph);

/// The six terms of the dilated-coordinate energy. The three pointwise terms
/// are evaluated at the current state; the three integrals are running sums.
/// With k_gain != 1 the Laplacian terms carry the factor k.
struct EnergyLedger {
  double kinetic = 0.0;             // 1/2 ||t X' + 2 (X - X*)||^2
  double laplacian_term = 0.0;      // (k t^2 / 2) (X - X*)^T L~ (X - X*)
  double potential_term = 0.0;      // t^{2-beta} (F(X) - F*)
  double integral_laplacian = 0.0;  // k int s (X - X*)^T L~ (X - X*) ds
  double integral_bregman = 0.0;    // 2 int s^{1-beta} (F* - F(X) - <grad F(X), X* - X>) ds
  double integral_beta = 0.0;       // beta int s^{1-beta} (F(X) - F*) ds

  double total() const noexcept {
    return kinetic + laplacian_term + potential_term + integral_laplacian + integral_bregman + integral_beta;
  }
  double min_component() const noexcept;
};

/// Running values of the three energy integrals.
struct EnergyAccumulators {
  double laplacian = 0.0;
  double bregman = 0.0;
  double beta = 0.0;
};

/// Integrands of the three accumulated terms at one state.
struct EnergyIntegrands {
  double laplacian = 0.0;
  double bregman = 0.0;
  double beta = 0.0;
};

EnergyIntegrands energy_integrands(const FlowState& state, const FlowParams& params,
                                   const SeparableObjective& objective, const AgentGraph& graph,
                                   const ConsensusOptimum& optimum);

EnergyLedger energy_at(const FlowState& state, const EnergyAccumulators& accumulators, const FlowParams& params,
                       const SeparableObjective& objective, const AgentGraph& graph,
                       const ConsensusOptimum& optimum);

/// Limit of the energy as t0 -> 0 with bounded velocity: 2 ||X0 - X*||^2.
double reference_energy(const Vector& x0, const ConsensusOptimum& optimum);

struct FlowSample {
  double t = 0.0;
  double f_gap = 0.0;
  double grad_norm = 0.0;
  double laplacian_norm = 0.0;
  EnergyLedger energy;
};

struct FlowTrajectory {
  std::vector<FlowSample> samples;
  FlowState final_state;
  long steps = 0;
};

/// Classical fixed-step RK4 from t0 to horizon. The energy integrals are
/// accumulated with the trapezoidal rule on every RK4 grid point.
/// Throws DivergenceError (with the last finite time) if the state blows up.
FlowTrajectory integrate(const FlowParams& params, const SeparableObjective& objective, const AgentGraph& graph,
                         const ConsensusOptimum& optimum, const Vector& x0, const Vector& v0);

/// Energy bookkeeping over a stored trajectory.
struct EnergyAudit {
  double initial_energy = 0.0;
  double max_relative_drift = 0.0;   // max_t |E(t) - E(t0)| / max(E(t0), 1e-12)
  double min_relative_component = 0.0;  // min over samples of min_component / (1 + |E|)
  long negative_components = 0;      // components below -tolerance * (1 + |E|)
  double bound_ratio = 0.0;          // max_t t^{2-beta}(F - F*) / E(t0)
};

EnergyAudit audit_energy(const FlowTrajectory& trajectory, double beta, double negativity_tolerance = 1e-9);

}  // namespace dagm
