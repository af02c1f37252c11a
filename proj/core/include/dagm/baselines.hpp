#pragma once

#include <functional>
#include <string>

#include "dagm/graph.hpp"
#include "dagm/objective.hpp"
#include "dagm/trace.hpp"
#include "dagm/types.hpp"

namespace dagm {

enum class BaselineKind { dgd, diging, pi_consensus };
std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

struct BaselineOptions {
  BaselineKind kind = BaselineKind::dgd;
  long iters = 1000;
  double alpha = 0.001;
  /// Integral gain (PI consensus only).
  double beta_gain = 0.1;
  /// Explicit Euler step (PI consensus only).
  double h_step = 0.1;
  double divergence_factor = 1e6;

  void validate() const;
};

/// Called after every iteration with (k, X_k, auxiliary state). The auxiliary
/// state is the gradient tracker y for DIGing, the integral state v for PI
/// consensus and empty for DGD.
using BaselineObserver = std::function<void(long, const Vector&, const Vector&)>;

/// x_i <- sum_j W_ij x_j - alpha grad f_i(x_i) with Metropolis weights.
RunTrace dgd_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                 const ConsensusOptimum& optimum, const BaselineOptions& options,
                 const BaselineObserver& observer = {});

/// x <- W x - alpha y;  y <- W y + grad F(x_new) - grad F(x_old);  y_0 = grad F(x_0).
RunTrace diging_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                    const ConsensusOptimum& optimum, const BaselineOptions& options,
                    const BaselineObserver& observer = {});

/// Explicit Euler on  x' = -alpha grad F(x) - L~x - beta v,  v' = L~x,  v(0) = 0.
RunTrace pi_consensus_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                          const ConsensusOptimum& optimum, const BaselineOptions& options,
                          const BaselineObserver& observer = {});

RunTrace baseline_run(const SeparableObjective& objective, const AgentGraph& graph, const Vector& x0,
                      const ConsensusOptimum& optimum, const BaselineOptions& options,
                      const BaselineObserver& observer = {});

}  // namespace dagm
