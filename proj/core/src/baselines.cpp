#include "dagm/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "dagm/error.hpp"

namespace dagm {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::dgd: return "dgd";
    case BaselineKind::diging: return "diging";
    case BaselineKind::pi_consensus: return "pi-consensus";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "dgd") return BaselineKind::dgd;
  if (name == "diging") return BaselineKind::diging;
  if (name == "pi-consensus" || name == "pi_consensus") return BaselineKind::pi_consensus;
  throw InvalidArgument("unknown baseline '" + name + "'");
}

void BaselineOptions::validate() const {
  if (iters < 0) throw InvalidArgument("iteration count must be non-negative");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (kind == BaselineKind::pi_consensus) {
    if (!(beta_gain > 0.0)) throw InvalidArgument("PI integral gain must be positive");
    if (!(h_step > 0.0)) throw InvalidArgument("PI step must be positive");
  }
}

namespace {

// Shared bookkeeping: the k = 0 row, one row per iteration, divergence guard.
class Recorder {
 public:
  Recorder(const std::string& algorithm, const SeparableObjective& objective, const AgentGraph& graph,
           const Vector& x0, const ConsensusOptimum& optimum, const BaselineOptions& options)
      : objective_(objective), graph_(graph), optimum_(optimum), factor_(options.divergence_factor) {
    options.validate();
    if (x0.size() != objective.stacked_size()) throw DimensionError("X0 has wrong length");
    if (graph.agents() != objective.agents()) throw DimensionError("graph and objective disagree on agent count");
    trace_.algorithm = algorithm;
    trace_.problem = objective.name();
    trace_.f_star = optimum.f_star;
    trace_.initial_distance_sq = (x0 - optimum.stacked).squaredNorm();
    record(0, x0);
    gap0_ = trace_.records.front().f_gap;
  }

  // Returns false once the run has diverged.
  bool record(long k, const Vector& x) {
    TraceRecord rec;
    rec.k = k;
    rec.f_gap = objective_.value(x) - optimum_.f_star;
    objective_.gradient(x, grad_);
    rec.grad_norm = grad_.norm();
    apply_lifted_laplacian(graph_, objective_.dim(), x, lap_);
    rec.laplacian_norm = lap_.norm();
    trace_.records.push_back(rec);
    if (k > 0 && (!x.allFinite() || !std::isfinite(rec.f_gap) ||
                  std::abs(rec.f_gap) > factor_ * std::max(std::abs(gap0_), 1e-12))) {
      trace_.diverged = true;
      trace_.divergence_index = k;
      return false;
    }
    return true;
  }

  RunTrace take() { return std::move(trace_); }

 private:
  const SeparableObjective& objective_;
  const AgentGraph& graph_;
  const ConsensusOptimum& optimum_;
  double factor_;
  double gap0_ = 0.0;
  Vector grad_, lap_;
  RunTrace trace_;
};

}  // namespace

RunTrace dgd_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                 const ConsensusOptimum& optimum, const BaselineOptions& options, const BaselineObserver& observer) {
  Recorder rec("dgd", objective, graph, x0, optimum, options);
  const Matrix w = metropolis_weights(graph);
  const int d = objective.dim();
  Vector x = x0, mixed, grad;
  const Vector none;
  for (long k = 1; k <= options.iters; ++k) {
    objective.gradient(x, grad);
    apply_mixing(graph, w, d, x, mixed);
    x = mixed - options.alpha * grad;
    if (observer) observer(k, x, none);
    if (!rec.record(k, x)) break;
  }
  return rec.take();
}

RunTrace diging_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                    const ConsensusOptimum& optimum, const BaselineOptions& options,
                    const BaselineObserver& observer) {
  Recorder rec("diging", objective, graph, x0, optimum, options);
  const Matrix w = metropolis_weights(graph);
  const int d = objective.dim();
  Vector x = x0;
  Vector grad_old = objective.gradient(x);
  Vector y = grad_old;
  Vector mixed, grad_new;
  if (observer) observer(0, x, y);
  for (long k = 1; k <= options.iters; ++k) {
    apply_mixing(graph, w, d, x, mixed);
    x = mixed - options.alpha * y;
    objective.gradient(x, grad_new);
    apply_mixing(graph, w, d, y, mixed);
    y = mixed + grad_new - grad_old;
    std::swap(grad_old, grad_new);
    if (observer) observer(k, x, y);
    if (!rec.record(k, x)) break;
  }
  return rec.take();
}

RunTrace pi_consensus_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                          const ConsensusOptimum& optimum, const BaselineOptions& options,
                          const BaselineObserver& observer) {
  Recorder rec("pi-consensus", objective, graph, x0, optimum, options);
  const int d = objective.dim();
  Vector x = x0;
  Vector v = Vector::Zero(x0.size());
  Vector grad, lap;
  if (observer) observer(0, x, v);
  for (long k = 1; k <= options.iters; ++k) {
    objective.gradient(x, grad);
    apply_lifted_laplacian(graph, d, x, lap);
    x += options.h_step * (-options.alpha * grad - lap - options.beta_gain * v);
    v += options.h_step * lap;
    if (observer) observer(k, x, v);
    if (!rec.record(k, x)) break;
  }
  return rec.take();
}

RunTrace baseline_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                      const ConsensusOptimum& optimum, const BaselineOptions& options,
                      const BaselineObserver& observer) {
  switch (options.kind) {
    case BaselineKind::dgd: return dgd_run(objective, graph, x0, optimum, options, observer);
    case BaselineKind::diging: return diging_run(objective, graph, x0, optimum, options, observer);
    case BaselineKind::pi_consensus: return pi_consensus_run(objective, graph, x0, optimum, options, observer);
  }
  throw InvalidArgument("unknown baseline");
}

}  // namespace dagm
