#include <doctest.h>

#include <random>

#include "dagm/error.hpp"
#include "dagm/flow.hpp"
#include "oracles.hpp"

using dagm::Vector;

namespace {

struct Fixture {
  dagm::SeparableObjective obj;
  dagm::AgentGraph graph;
  dagm::ConsensusOptimum opt;
};

Fixture make_fixture(dagm::OffsetMode offsets = dagm::OffsetMode::shared) {
  dagm::QuadraticSpec spec;
  spec.dim = 2;
  spec.min_eig = 1e-2;
  spec.offsets = offsets;
  spec.seed = 7;
  auto obj = dagm::make_quadratic(spec);
  auto graph = dagm::build_topology({dagm::TopologyKind::ring, 5});
  auto opt = dagm::make_consensus_optimum(obj, *obj.closed_form_minimizer());
  return {std::move(obj), std::move(graph), std::move(opt)};
}

}  // namespace

TEST_CASE("flow right-hand side, stacked and per-agent") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  const auto dense = oracle::dense_quadratic(fx.obj, fx.graph);
  std::mt19937_64 rng(1);
  dagm::FlowParams p;
  p.beta = 0.3;
  p.k_gain = 2.0;
  const dagm::FlowState s{2.5, oracle::gaussian(10, rng), oracle::gaussian(10, rng)};
  const auto a = dagm::flow_rhs(s, p, fx.obj, fx.graph);
  const auto b = dagm::flow_rhs_per_agent(s, p, fx.obj, fx.graph);
  const Vector expected = -(3.0 / 2.5) * s.V - std::pow(2.5, -0.3) * dense.gradient(s.X) - 2.0 * dense.lifted * s.X;
  CHECK((a.dX - s.V).norm() == 0.0);
  CHECK((a.dV - expected).norm() < 1e-12);
  CHECK((b.dV - expected).norm() < 1e-12);
  CHECK_THROWS_AS(dagm::flow_rhs({0.0, s.X, s.V}, p, fx.obj, fx.graph), dagm::InvalidArgument);
}

TEST_CASE("equilibrium start has zero energy and no drift") {
  auto fx = make_fixture();
  dagm::FlowParams p;
  p.t0 = 1.0;
  p.horizon = 3.0;
  p.dt = 1e-2;
  const auto traj = dagm::integrate(p, fx.obj, fx.graph, fx.opt, fx.opt.stacked, Vector::Zero(10));
  const auto audit = dagm::audit_energy(traj, p.beta);
  CHECK(audit.initial_energy == 0.0);
  CHECK(audit.max_relative_drift == 0.0);
  CHECK(audit.negative_components == 0);
  CHECK(traj.samples.back().f_gap == 0.0);
}

TEST_CASE("energy ledger terms at a hand-checked state") {
  auto fx = make_fixture();
  const auto dense = oracle::dense_quadratic(fx.obj, fx.graph);
  std::mt19937_64 rng(2);
  dagm::FlowParams p;
  p.beta = 0.5;
  p.k_gain = 1.5;
  const dagm::FlowState s{4.0, oracle::gaussian(10, rng), oracle::gaussian(10, rng)};
  const dagm::EnergyAccumulators acc{0.1, 0.2, 0.3};
  const auto e = dagm::energy_at(s, acc, p, fx.obj, fx.graph, fx.opt);
  const Vector d = s.X - fx.opt.stacked;
  CHECK(e.kinetic == doctest::Approx(0.5 * (4.0 * s.V + 2.0 * d).squaredNorm()));
  CHECK(e.laplacian_term == doctest::Approx(0.75 * 16.0 * d.dot(dense.lifted * d)));
  CHECK(e.potential_term == doctest::Approx(std::pow(4.0, 1.5) * (dense.value(s.X) - fx.opt.f_star)));
  CHECK(e.integral_laplacian == 0.1);
  CHECK(e.total() == doctest::Approx(e.kinetic + e.laplacian_term + e.potential_term + 0.6));
  CHECK(dagm::reference_energy(s.X, fx.opt) == doctest::Approx(2.0 * d.squaredNorm()));
}

TEST_CASE("conservation drift is second order in dt") {
  auto fx = make_fixture();
  std::mt19937_64 rng(5);
  const Vector x0 = oracle::gaussian(10, rng);
  dagm::FlowParams p;
  p.t0 = 1.0;
  p.horizon = 11.0;
  double drift[2];
  for (int i = 0; i < 2; ++i) {
    p.dt = i == 0 ? 1e-2 : 1e-3;
    drift[i] = dagm::audit_energy(dagm::integrate(p, fx.obj, fx.graph, fx.opt, x0, Vector::Zero(10)), p.beta)
                   .max_relative_drift;
  }
  // Trapezoid accumulation: a factor 10 in dt gives ~100 in drift.
  CHECK(drift[0] / drift[1] > 100.0 / 3.0);
  CHECK(drift[0] / drift[1] < 300.0);
}

TEST_CASE("trajectory agrees with the dense reference integrator") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  const auto dense = oracle::dense_quadratic(fx.obj, fx.graph);
  std::mt19937_64 rng(9);
  const Vector x0 = oracle::gaussian(10, rng);
  dagm::FlowParams p;
  p.t0 = 0.5;
  p.horizon = 5.5;
  p.dt = 1e-3;
  p.record_every = 500;
  const auto traj = dagm::integrate(p, fx.obj, fx.graph, fx.opt, x0, Vector::Zero(10));
  const auto ref = oracle::dense_flow(dense, fx.opt.stacked, fx.opt.f_star, p.beta, p.k_gain, p.t0, p.dt, p.horizon,
                                      x0, Vector::Zero(10), p.record_every);
  REQUIRE(traj.samples.size() == ref.gap.size());
  for (std::size_t i = 0; i < ref.gap.size(); ++i) {
    CHECK(traj.samples[i].t == doctest::Approx(ref.t[i]).epsilon(1e-14));
    CHECK(traj.samples[i].f_gap == doctest::Approx(ref.gap[i]).epsilon(1e-9));
    CHECK(traj.samples[i].energy.total() == doctest::Approx(ref.energy[i]).epsilon(1e-5));
  }
  CHECK(traj.steps == 5000);
}

TEST_CASE("invalid flow parameters and blow-up") {
  auto fx = make_fixture();
  dagm::FlowParams p;
  p.dt = -1.0;
  CHECK_THROWS_AS(p.validate(), dagm::InvalidArgument);
  p = {};
  p.horizon = p.t0;
  CHECK_THROWS_AS(p.validate(), dagm::InvalidArgument);
  // An absurd step makes RK4 explode; the error carries the last finite time.
  p = {};
  p.t0 = 1.0;
  p.dt = 50.0;
  p.horizon = 1e5;
  p.k_gain = 1e3;
  std::mt19937_64 rng(1);
  try {
    dagm::integrate(p, fx.obj, fx.graph, fx.opt, oracle::gaussian(10, rng), Vector::Zero(10));
    FAIL("expected DivergenceError");
  } catch (const dagm::DivergenceError& e) {
    CHECK(e.last_valid_time() >= 1.0);
    CHECK(std::isfinite(e.last_valid_time()));
  }
}
