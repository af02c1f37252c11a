#include <doctest.h>

#include <random>

#include "dagm/error.hpp"
#include "dagm/graph.hpp"
#include "oracles.hpp"

using dagm::AgentGraph;
using dagm::TopologyKind;
using dagm::Vector;

TEST_CASE("ring of five: degrees, Laplacian and spectrum") {
  const auto g = dagm::build_topology({TopologyKind::ring, 5});
  CHECK(g.edges().size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(g.degree(i) == 2);
  // Cycle eigenvalues are 2 - 2 cos(2 pi j / m).
  const double pi = std::acos(-1.0);
  CHECK(g.spectrum().lambda_max == doctest::Approx(2.0 - 2.0 * std::cos(4.0 * pi / 5.0)).epsilon(1e-12));
  CHECK(g.spectrum().lambda_min_nonzero == doctest::Approx(2.0 - 2.0 * std::cos(2.0 * pi / 5.0)).epsilon(1e-12));
  CHECK((g.laplacian() - oracle::dense_laplacian(5, g.edges())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("named topologies match Jacobi eigenvalues") {
  for (auto kind : {TopologyKind::ring, TopologyKind::path, TopologyKind::star, TopologyKind::complete}) {
    const auto g = dagm::build_topology({kind, 6});
    const auto ev = oracle::jacobi_eigenvalues(g.laplacian());
    CHECK(std::abs(ev.front()) < 1e-12);
    CHECK(g.spectrum().lambda_max == doctest::Approx(ev.back()).epsilon(1e-12));
    CHECK(g.spectrum().lambda_min_nonzero == doctest::Approx(ev[1]).epsilon(1e-12));
  }
  // Complete graph on m nodes: every non-zero eigenvalue is m.
  const auto k4 = dagm::build_topology({TopologyKind::complete, 4});
  CHECK(k4.spectrum().lambda_max == doctest::Approx(4.0));
  CHECK(k4.spectrum().lambda_min_nonzero == doctest::Approx(4.0));
}

TEST_CASE("edge list validation") {
  CHECK_THROWS_AS(AgentGraph(1, {}), dagm::InvalidArgument);
  CHECK_THROWS_AS(AgentGraph(3, {{0, 0}, {1, 2}}), dagm::InvalidArgument);
  CHECK_THROWS_AS(AgentGraph(3, {{0, 3}}), dagm::InvalidArgument);
  CHECK_THROWS_AS(AgentGraph(4, {{0, 1}, {2, 3}}), dagm::ConnectivityError);
  const AgentGraph dup(3, {{0, 1}, {1, 0}, {1, 2}});
  CHECK(dup.edges().size() == 2);
  CHECK_THROWS_AS(dagm::topology_kind_from_string("torus"), dagm::InvalidArgument);
}

TEST_CASE("Erdos-Renyi sampling is seeded and connected") {
  dagm::TopologySpec spec{TopologyKind::erdos_renyi, 10, 0.3, 42};
  const auto a = dagm::build_topology(spec);
  const auto b = dagm::build_topology(spec);
  CHECK(a.edges() == b.edges());
  CHECK(a.spectrum().lambda_min_nonzero > 0.0);
  spec.edge_probability = 0.0;
  CHECK_THROWS_AS(dagm::build_topology(spec), dagm::InvalidArgument);
}

TEST_CASE("lifted Laplacian equals the Kronecker product and annihilates consensus") {
  std::mt19937_64 rng(3);
  const auto g = dagm::build_topology({TopologyKind::star, 6});
  const auto dense = oracle::kron_identity(g.laplacian(), 4);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = oracle::gaussian(24, rng);
    CHECK((dagm::apply_lifted_laplacian(g, 4, x) - dense * x).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Vector consensus = oracle::gaussian(4, rng).replicate(6, 1);
  CHECK(dagm::apply_lifted_laplacian(g, 4, consensus).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(dagm::apply_lifted_laplacian(g, 4, Vector::Zero(23)), dagm::DimensionError);
}

TEST_CASE("Metropolis weights on a path") {
  const auto g = dagm::build_topology({TopologyKind::path, 3});
  const auto w = dagm::metropolis_weights(g);
  // Degrees 1,2,1: every edge weight is 1/(1+2).
  CHECK(w(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(w(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(w(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(w(0, 2) == 0.0);
  CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(1);
  const Vector x = oracle::gaussian(6, rng);
  Vector out;
  dagm::apply_mixing(g, w, 2, x, out);
  CHECK((out - oracle::kron_identity(w, 2) * x).cwiseAbs().maxCoeff() < 1e-15);
}
