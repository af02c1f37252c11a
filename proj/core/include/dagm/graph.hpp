#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dagm/types.hpp"

namespace dagm {

enum class TopologyKind { ring, path, star, complete, erdos_renyi };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

struct TopologySpec {
  TopologyKind kind = TopologyKind::ring;
  int agents = 5;
  // Erdos-Renyi only.
  double edge_probability = 0.5;
  std::uint64_t seed = 0;
  int max_retries = 1000;
};

/// Largest and smallest non-zero Laplacian eigenvalue.
struct SpectralExtremes {
  double lambda_max = 0.0;
  double lambda_min_nonzero = 0.0;
};

/// Undirected, unweighted, connected communication graph over `m` agents.
///
/// The Laplacian is stored densely; connectivity is checked at construction
/// through the second-smallest Laplacian eigenvalue. Instances are immutable.
class AgentGraph {
 public:
  using Edge = std::pair<int, int>;

  /// Builds the graph from an edge list. Self loops are rejected, duplicate
  /// edges (in either orientation) are merged.
  /// Throws InvalidArgument for m < 2 or out-of-range endpoints and
  /// ConnectivityError when the graph is disconnected.
  AgentGraph(int agents, std::vector<Edge> edges);

  int agents() const noexcept { return agents_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Matrix& laplacian() const noexcept { return laplacian_; }
  std::span<const int> neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  const SpectralExtremes& spectrum() const noexcept { return spectrum_; }

 private:
  int agents_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  Matrix laplacian_;
  SpectralExtremes spectrum_;
};

/// Constructs one of the named topologies. Erdos-Renyi graphs are resampled
/// until connected, up to `spec.max_retries` attempts.
AgentGraph build_topology(const TopologySpec& spec);

/// Eigen-decomposes the Laplacian and returns its extreme non-zero
/// eigenvalues. Throws ConnectivityError when the second eigenvalue is below
/// 1e-9 * lambda_max.
SpectralExtremes spectral_extremes(const AgentGraph& graph);

/// (L (x) I_d) X evaluated matrix-free from neighbor lists: block i is
/// sum_{j in N_i} (x_i - x_j).
Vector apply_lifted_laplacian(const AgentGraph& graph, int dim, const Vector& stacked);
void apply_lifted_laplacian(const AgentGraph& graph, int dim, const Vector& stacked, Vector& out);

/// Metropolis-Hastings mixing matrix: W_ij = 1/(1+max(deg_i,deg_j)) on edges,
/// the diagonal absorbs the remainder of each row.
Matrix metropolis_weights(const AgentGraph& graph);

/// Neighbor-indexed mixing (W (x) I_d) X. Block i only reads blocks j in N_i and i.
void apply_mixing(const AgentGraph& graph, const Matrix& weights, int dim, const Vector& stacked, Vector& out);

}  // namespace dagm
