#include "dagm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "dagm/error.hpp"

namespace dagm {

namespace {

constexpr double kConnectivityTolerance = 1e-9;

std::vector<AgentGraph::Edge> normalize_edges(int agents, std::vector<AgentGraph::Edge> edges) {
  std::set<AgentGraph::Edge> unique;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= agents || v >= agents) {
      throw InvalidArgument(fmt::format("edge ({}, {}) out of range for {} agents", u, v, agents));
    }
    if (u == v) throw InvalidArgument(fmt::format("self loop at agent {}", u));
    unique.emplace(std::min(u, v), std::max(u, v));
  }
  return {unique.begin(), unique.end()};
}

SpectralExtremes extremes_of(const Matrix& laplacian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("Laplacian eigen-decomposition failed");
  const Vector& ev = solver.eigenvalues();  // ascending
  const double lambda_max = ev(ev.size() - 1);
  const double lambda_2 = ev(1);
  if (!(lambda_max > 0.0) || lambda_2 <= kConnectivityTolerance * lambda_max) {
    throw ConnectivityError(fmt::format("graph is not connected (lambda_2 = {:.3e})", lambda_2));
  }
  return {lambda_max, lambda_2};
}

}  // namespace

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ring: return "ring";
    case TopologyKind::path: return "path";
    case TopologyKind::star: return "star";
    case TopologyKind::complete: return "complete";
    case TopologyKind::erdos_renyi: return "erdos_renyi";
  }
  return "unknown";
}

TopologyKind topology_kind_from_string(const std::string& name) {
  if (name == "ring") return TopologyKind::ring;
  if (name == "path") return TopologyKind::path;
  if (name == "star") return TopologyKind::star;
  if (name == "complete") return TopologyKind::complete;
  if (name == "erdos_renyi" || name == "erdos-renyi") return TopologyKind::erdos_renyi;
  throw InvalidArgument("unknown topology '" + name + "'");
}

AgentGraph::AgentGraph(int agents, std::vector<Edge> edges) : agents_(agents) {
  if (agents < 2) throw InvalidArgument(fmt::format("graph needs at least 2 agents, got {}", agents));
  edges_ = normalize_edges(agents, std::move(edges));
  neighbors_.assign(static_cast<std::size_t>(agents), {});
  laplacian_ = Matrix::Zero(agents, agents);
  for (auto [u, v] : edges_) {
    neighbors_[static_cast<std::size_t>(u)].push_back(v);
    neighbors_[static_cast<std::size_t>(v)].push_back(u);
    laplacian_(u, v) = -1.0;
    laplacian_(v, u) = -1.0;
  }
  for (int i = 0; i < agents; ++i) {
    auto& nb = neighbors_[static_cast<std::size_t>(i)];
    std::sort(nb.begin(), nb.end());
    laplacian_(i, i) = static_cast<double>(nb.size());
  }
  spectrum_ = extremes_of(laplacian_);
}

AgentGraph build_topology(const TopologySpec& spec) {
  const int m = spec.agents;
  if (m < 2) throw InvalidArgument(fmt::format("topology needs at least 2 agents, got {}", m));
  std::vector<AgentGraph::Edge> edges;
  switch (spec.kind) {
    case TopologyKind::ring:
      for (int i = 0; i < m; ++i) edges.emplace_back(i, (i + 1) % m);
      return AgentGraph(m, edges);
    case TopologyKind::path:
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      return AgentGraph(m, edges);
    case TopologyKind::star:
      for (int i = 1; i < m; ++i) edges.emplace_back(0, i);
      return AgentGraph(m, edges);
    case TopologyKind::complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      return AgentGraph(m, edges);
    case TopologyKind::erdos_renyi: {
      if (!(spec.edge_probability > 0.0 && spec.edge_probability <= 1.0)) {
        throw InvalidArgument("Erdos-Renyi edge probability must lie in (0, 1]");
      }
      std::mt19937_64 rng(spec.seed);
      std::bernoulli_distribution coin(spec.edge_probability);
      for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
        edges.clear();
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j)
            if (coin(rng)) edges.emplace_back(i, j);
        try {
          return AgentGraph(m, edges);
        } catch (const ConnectivityError&) {
          // resample
        }
      }
      throw ConnectivityError(
          fmt::format("no connected Erdos-Renyi sample after {} attempts", spec.max_retries));
    }
  }
  throw InvalidArgument("unhandled topology kind");
}

SpectralExtremes spectral_extremes(const AgentGraph& graph) { return extremes_of(graph.laplacian()); }

void apply_lifted_laplacian(const AgentGraph& graph, int dim, const Vector& stacked, Vector& out) {
  const Eigen::Index n = static_cast<Eigen::Index>(graph.agents()) * dim;
  if (dim <= 0 || stacked.size() != n) {
    throw DimensionError(fmt::format("lifted Laplacian expects length {} (m={}, d={}), got {}", n,
                                     graph.agents(), dim, stacked.size()));
  }
  out.resize(n);
  for (int i = 0; i < graph.agents(); ++i) {
    auto xi = block_of(stacked, i, dim);
    auto oi = block_of(out, i, dim);
    oi.setZero();
    for (int j : graph.neighbors(i)) oi += xi - block_of(stacked, j, dim);
  }
}

Vector apply_lifted_laplacian(const AgentGraph& graph, int dim, const Vector& stacked) {
  Vector out;
  apply_lifted_laplacian(graph, dim, stacked, out);
  return out;
}

Matrix metropolis_weights(const AgentGraph& graph) {
  const int m = graph.agents();
  Matrix w = Matrix::Zero(m, m);
  for (auto [u, v] : graph.edges()) {
    const double weight = 1.0 / (1.0 + std::max(graph.degree(u), graph.degree(v)));
    w(u, v) = weight;
    w(v, u) = weight;
  }
  for (int i = 0; i < m; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return w;
}

void apply_mixing(const AgentGraph& graph, const Matrix& weights, int dim, const Vector& stacked, Vector& out) {
  const int m = graph.agents();
  const Eigen::Index n = static_cast<Eigen::Index>(m) * dim;
  if (weights.rows() != m || weights.cols() != m) throw DimensionError("mixing matrix size does not match graph");
  if (stacked.size() != n) throw DimensionError("mixing input has wrong length");
  out.resize(n);
  for (int i = 0; i < m; ++i) {
    auto oi = block_of(out, i, dim);
    // Difference form (uses W_ii = 1 - sum_j W_ij): consensus states map to themselves bit for bit.
    const auto xi = block_of(stacked, i, dim);
    oi = xi;
    for (int j : graph.neighbors(i)) oi += weights(i, j) * (block_of(stacked, j, dim) - xi);
  }
}

}  // namespace dagm
