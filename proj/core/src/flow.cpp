#include "dagm/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dagm/error.hpp"

namespace dagm {

void FlowParams::validate() const {
  if (!(beta > 0.0 && beta < 2.0)) throw InvalidArgument("flow beta must lie in (0, 2)");
  if (!(k_gain > 0.0)) throw InvalidArgument("flow k_gain must be positive");
  if (!(t0 > 0.0)) throw InvalidArgument("flow t0 must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("flow dt must be positive");
  if (!(horizon > t0)) throw InvalidArgument("flow horizon must exceed t0");
  if (record_every < 1) throw InvalidArgument("record_every must be >= 1");
}

double EnergyLedger::min_component() const noexcept {
  return std::min({kinetic, laplacian_term, potential_term, integral_laplacian, integral_bregman, integral_beta});
}

namespace {

void check_time(double t) {
  if (!(t > 0.0)) throw InvalidArgument(fmt::format("flow is singular at t = {}", t));
}

// dV given precomputed grad F(X) and L~X.
void acceleration(double t, const FlowParams& p, const Vector& v, const Vector& grad, const Vector& lap,
                  Vector& out) {
  out = -(3.0 / t) * v - std::pow(t, -p.beta) * grad - p.k_gain * lap;
}

struct PointValues {
  double f = 0.0;
  Vector grad;
  Vector lap;
};

PointValues evaluate(const Vector& x, const SeparableObjective& objective, const AgentGraph& graph) {
  PointValues pv;
  pv.f = objective.value(x);
  objective.gradient(x, pv.grad);
  apply_lifted_laplacian(graph, objective.dim(), x, pv.lap);
  return pv;
}

EnergyIntegrands integrands_from(double t, const Vector& x, const PointValues& pv, const FlowParams& p,
                                 const ConsensusOptimum& opt) {
  const Vector dev = x - opt.stacked;
  const double gap = pv.f - opt.f_star;
  const double s1b = std::pow(t, 1.0 - p.beta);
  EnergyIntegrands in;
  in.laplacian = p.k_gain * t * dev.dot(pv.lap);
  // F* - F(X) - <grad F(X), X* - X>
  in.bregman = 2.0 * s1b * (-gap + pv.grad.dot(dev));
  in.beta = p.beta * s1b * gap;
  return in;
}

EnergyLedger ledger_from(double t, const Vector& x, const Vector& v, const PointValues& pv,
                         const EnergyAccumulators& acc, const FlowParams& p, const ConsensusOptimum& opt) {
  const Vector dev = x - opt.stacked;
  EnergyLedger e;
  e.kinetic = 0.5 * (t * v + 2.0 * dev).squaredNorm();
  e.laplacian_term = 0.5 * p.k_gain * t * t * dev.dot(pv.lap);
  e.potential_term = std::pow(t, 2.0 - p.beta) * (pv.f - opt.f_star);
  e.integral_laplacian = acc.laplacian;
  e.integral_bregman = acc.bregman;
  e.integral_beta = acc.beta;
  return e;
}

FlowSample sample_from(double t, const Vector& x, const Vector& v, const PointValues& pv,
                       const EnergyAccumulators& acc, const FlowParams& p, const ConsensusOptimum& opt) {
  FlowSample s;
  s.t = t;
  s.f_gap = pv.f - opt.f_star;
  s.grad_norm = pv.grad.norm();
  s.laplacian_norm = pv.lap.norm();
  s.energy = ledger_from(t, x, v, pv, acc, p, opt);
  return s;
}

}  // namespace

FlowDerivative flow_rhs(const FlowState& state, const FlowParams& params, const SeparableObjective& objective,
                        const AgentGraph& graph) {
  check_time(state.t);
  if (state.X.size() != objective.stacked_size() || state.V.size() != objective.stacked_size()) {
    throw DimensionError("flow state has wrong length");
  }
  FlowDerivative d;
  d.dX = state.V;
  const Vector grad = objective.gradient(state.X);
  const Vector lap = apply_lifted_laplacian(graph, objective.dim(), state.X);
  acceleration(state.t, params, state.V, grad, lap, d.dV);
  return d;
}

FlowDerivative flow_rhs_per_agent(const FlowState& state, const FlowParams& params,
                                  const SeparableObjective& objective, const AgentGraph& graph) {
  check_time(state.t);
  const int d = objective.dim();
  if (state.X.size() != objective.stacked_size() || state.V.size() != objective.stacked_size()) {
    throw DimensionError("flow state has wrong length");
  }
  FlowDerivative out;
  out.dX = state.V;
  out.dV.resize(state.V.size());
  const double grad_weight = std::pow(state.t, -params.beta);
  Vector g(d);
  for (int i = 0; i < objective.agents(); ++i) {
    const auto xi = block_of(state.X, i, d);
    objective.local(i).gradient(xi, g);
    Vector coupling = Vector::Zero(d);
    for (int j : graph.neighbors(i)) coupling += xi - block_of(state.X, j, d);
    block_of(out.dV, i, d) = -(3.0 / state.t) * block_of(state.V, i, d) - grad_weight * g - params.k_gain * coupling;
  }
  return out;
}

EnergyIntegrands energy_integrands(const FlowState& state, const FlowParams& params,
                                   const SeparableObjective& objective, const AgentGraph& graph,
                                   const ConsensusOptimum& optimum) {
  return integrands_from(state.t, state.X, evaluate(state.X, objective, graph), params, optimum);
}

EnergyLedger energy_at(const FlowState& state, const EnergyAccumulators& accumulators, const FlowParams& params,
                       const SeparableObjective& objective, const AgentGraph& graph,
                       const ConsensusOptimum& optimum) {
  return ledger_from(state.t, state.X, state.V, evaluate(state.X, objective, graph), accumulators, params, optimum);
}

double reference_energy(const Vector& x0, const ConsensusOptimum& optimum) {
  return 2.0 * (x0 - optimum.stacked).squaredNorm();
}

FlowTrajectory integrate(const FlowParams& params, const SeparableObjective& objective, const AgentGraph& graph,
                         const ConsensusOptimum& optimum, const Vector& x0, const Vector& v0) {
  params.validate();
  const Eigen::Index n = objective.stacked_size();
  if (x0.size() != n || v0.size() != n) throw DimensionError("initial flow state has wrong length");
  if (graph.agents() != objective.agents()) throw DimensionError("graph and objective disagree on agent count");
  if (optimum.stacked.size() != n) throw DimensionError("optimum has wrong length");

  const long steps = std::max(1L, std::lround((params.horizon - params.t0) / params.dt));
  const double dt = params.dt;
  const int d = objective.dim();

  FlowTrajectory traj;
  traj.samples.reserve(static_cast<std::size_t>(steps / params.record_every + 2));

  Vector x = x0;
  Vector v = v0;
  double t = params.t0;
  EnergyAccumulators acc;
  PointValues pv = evaluate(x, objective, graph);
  EnergyIntegrands integrand = integrands_from(t, x, pv, params, optimum);
  traj.samples.push_back(sample_from(t, x, v, pv, acc, params, optimum));

  Vector k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v, xs, vs, grad, lap;
  for (long step = 1; step <= steps; ++step) {
    // Stage 1 reuses the gradient and Laplacian already evaluated at (t, x).
    k1x = v;
    acceleration(t, params, v, pv.grad, pv.lap, k1v);

    xs = x + 0.5 * dt * k1x;
    vs = v + 0.5 * dt * k1v;
    objective.gradient(xs, grad);
    apply_lifted_laplacian(graph, d, xs, lap);
    k2x = vs;
    acceleration(t + 0.5 * dt, params, vs, grad, lap, k2v);

    xs = x + 0.5 * dt * k2x;
    vs = v + 0.5 * dt * k2v;
    objective.gradient(xs, grad);
    apply_lifted_laplacian(graph, d, xs, lap);
    k3x = vs;
    acceleration(t + 0.5 * dt, params, vs, grad, lap, k3v);

    xs = x + dt * k3x;
    vs = v + dt * k3v;
    objective.gradient(xs, grad);
    apply_lifted_laplacian(graph, d, xs, lap);
    k4x = vs;
    acceleration(t + dt, params, vs, grad, lap, k4v);

    x += (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    const double t_next = params.t0 + static_cast<double>(step) * dt;

    if (!x.allFinite() || !v.allFinite()) {
      throw DivergenceError(fmt::format("flow blew up after t = {}", t), step, t);
    }

    pv = evaluate(x, objective, graph);
    const EnergyIntegrands next = integrands_from(t_next, x, pv, params, optimum);
    acc.laplacian += 0.5 * (t_next - t) * (integrand.laplacian + next.laplacian);
    acc.bregman += 0.5 * (t_next - t) * (integrand.bregman + next.bregman);
    acc.beta += 0.5 * (t_next - t) * (integrand.beta + next.beta);
    integrand = next;
    t = t_next;

    if (step % params.record_every == 0 || step == steps) {
      traj.samples.push_back(sample_from(t, x, v, pv, acc, params, optimum));
    }
  }
  traj.final_state = FlowState{t, x, v};
  traj.steps = steps;
  return traj;
}

EnergyAudit audit_energy(const FlowTrajectory& trajectory, double beta, double negativity_tolerance) {
  EnergyAudit audit;
  if (trajectory.samples.empty()) return audit;
  audit.initial_energy = trajectory.samples.front().energy.total();
  const double denom = std::max(audit.initial_energy, 1e-12);
  audit.min_relative_component = std::numeric_limits<double>::infinity();
  for (const auto& s : trajectory.samples) {
    const double e = s.energy.total();
    audit.max_relative_drift = std::max(audit.max_relative_drift, std::abs(e - audit.initial_energy) / denom);
    const double scale = 1.0 + std::abs(e);
    const double rel = s.energy.min_component() / scale;
    audit.min_relative_component = std::min(audit.min_relative_component, rel);
    const EnergyLedger& l = s.energy;
    for (double c : {l.kinetic, l.laplacian_term, l.potential_term, l.integral_laplacian, l.integral_bregman,
                     l.integral_beta}) {
      if (c < -negativity_tolerance * scale) ++audit.negative_components;
    }
    audit.bound_ratio = std::max(audit.bound_ratio, std::pow(s.t, 2.0 - beta) * s.f_gap / denom);
  }
  return audit;
}

}  // namespace dagm
