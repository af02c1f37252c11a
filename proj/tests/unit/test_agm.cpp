#include <doctest.h>

#include <random>

#include "dagm/agm.hpp"
#include "dagm/error.hpp"
#include "oracles.hpp"

using dagm::Vector;

namespace {

struct Fixture {
  dagm::SeparableObjective obj;
  dagm::AgentGraph graph;
  dagm::ConsensusOptimum opt;
  oracle::DenseQuadratic dense;
};

Fixture make_fixture(dagm::OffsetMode offsets, double min_eig = 1e-2) {
  dagm::QuadraticSpec spec;
  spec.dim = 2;
  spec.min_eig = min_eig;
  spec.offsets = offsets;
  spec.seed = 7;
  auto obj = dagm::make_quadratic(spec);
  auto graph = dagm::build_topology({dagm::TopologyKind::ring, 5});
  auto opt = dagm::make_consensus_optimum(obj, *obj.closed_form_minimizer());
  auto dense = oracle::dense_quadratic(obj, graph);
  return {std::move(obj), std::move(graph), std::move(opt), std::move(dense)};
}

}  // namespace

TEST_CASE("coefficients at small k") {
  CHECK(dagm::theta(3) == 1.5);
  CHECK(dagm::coefficient_c(1) == doctest::Approx(4.0 / 3.0));
  CHECK(dagm::coefficient_A(1) == doctest::Approx(1.0 / 3.0));
  CHECK(dagm::coefficient_A(2) == doctest::Approx(6.0 / 5.0));
  CHECK(dagm::gradient_weight(2, 3.0, 0.5) == doctest::Approx(1.0 / std::sqrt(6.0)));
  CHECK_THROWS_AS(dagm::gradient_weight(0, 1.0, 0.5), dagm::InvalidArgument);
}

TEST_CASE("first two iterations by hand") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  std::mt19937_64 rng(11);
  const Vector x0 = oracle::gaussian(10, rng);
  const double h = 2.0, beta = 0.4, s1 = 0.2, s2 = 0.25;
  auto st = dagm::init(fx.obj, fx.graph, x0, h, beta, s1);
  CHECK(st.k == 1);
  CHECK(st.X == x0);
  CHECK(st.Z == x0);

  // k = 1: theta = 1/2, weight (2 * 1/2 * h)^{-beta} = h^{-beta}, rho = 1/4.
  const Vector g1 = std::pow(h, -beta) * fx.dense.gradient(x0) + fx.dense.lifted * x0;
  const Vector xp1 = x0 - 0.5 * s1 * g1;
  const Vector z2 = x0 - s1 * 0.5 * g1;
  const Vector x2 = 0.25 * xp1 + 0.75 * z2;
  CHECK((st.x_plus() - xp1).norm() < 1e-14);
  dagm::step(st, fx.obj, fx.graph, s2);
  CHECK(st.k == 2);
  CHECK(st.s == s2);
  CHECK((st.X - x2).norm() < 1e-14);
  CHECK((st.Z - z2).norm() < 1e-14);

  // k = 2: theta = 1, weight (2h)^{-beta}, rho = 4/9.
  const Vector g2 = std::pow(2 * h, -beta) * fx.dense.gradient(x2) + fx.dense.lifted * x2;
  const Vector z3 = z2 - s2 * 1.0 * g2;
  const Vector x3 = (4.0 / 9.0) * (x2 - 0.5 * s2 * g2) + (5.0 / 9.0) * z3;
  dagm::step(st, fx.obj, fx.graph, s2);
  CHECK((st.X - x3).norm() < 1e-14);
  CHECK((st.Z - z3).norm() < 1e-14);
  CHECK(st.f == doctest::Approx(fx.dense.value(x3)).epsilon(1e-14));
}

TEST_CASE("init rejects bad parameters") {
  auto fx = make_fixture(dagm::OffsetMode::shared);
  const Vector x0 = Vector::Zero(10);
  CHECK_THROWS_AS(dagm::init(fx.obj, fx.graph, x0, 1.0, 2.0), dagm::InvalidArgument);
  CHECK_THROWS_AS(dagm::init(fx.obj, fx.graph, x0, 1.0, 0.0), dagm::InvalidArgument);
  CHECK_THROWS_AS(dagm::init(fx.obj, fx.graph, x0, 0.0, 0.1), dagm::InvalidArgument);
  CHECK_THROWS_AS(dagm::init(fx.obj, fx.graph, Vector::Zero(9), 1.0, 0.1), dagm::DimensionError);
}

TEST_CASE("momentum form with s = h^2 matches step") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  std::mt19937_64 rng(12);
  for (long k : {1L, 2L, 17L, 400L}) {
    const double h = 0.7, beta = 1.3;
    auto st = dagm::init(fx.obj, fx.graph, oracle::gaussian(10, rng), h, beta, h * h);
    st.k = k;
    st.Z = oracle::gaussian(10, rng);
    const auto mf = dagm::momentum_form_step(k, st.X, 2.0 * (st.Z - fx.opt.stacked), fx.opt.stacked, h, beta,
                                             fx.obj, fx.graph);
    dagm::step(st, fx.obj, fx.graph, h * h);
    CHECK((st.X - mf.X).norm() < 1e-13);
    CHECK((2.0 * (st.Z - fx.opt.stacked) - mf.P).norm() < 1e-12);
  }
}

TEST_CASE("step-size diagnostics against duplicated formulas") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  std::mt19937_64 rng(13);
  const double h = 1.0, beta = 0.2;
  auto prev = dagm::init(fx.obj, fx.graph, oracle::gaussian(10, rng), h, beta, 0.1);
  dagm::step(prev, fx.obj, fx.graph, 0.15);
  auto next = prev;
  dagm::step(next, fx.obj, fx.graph, 0.15);
  const auto d = dagm::compute_step_diagnostics(prev, next, fx.opt.f_star, fx.opt.grad_at_opt);

  const auto& D = fx.dense;
  const double wp = std::pow(2 * prev.theta() * h, -beta), wn = std::pow(2 * next.theta() * h, -beta);
  const Vector gp = wp * D.gradient(prev.X) + D.lifted * prev.X;
  const Vector gn = wn * D.gradient(next.X) + D.lifted * next.X;
  const auto phi = [&](double w, const Vector& x) { return w * (D.value(x) - fx.opt.f_star) + 0.5 * x.dot(D.lifted * x); };
  const double a = phi(wp, prev.X) - phi(wn, next.X) - gn.dot(prev.X - next.X);
  const Vector gs = wn * fx.opt.grad_at_opt;
  const double r = -gs.squaredNorm() + 2.0 * gs.dot(gs - wn * D.gradient(next.X) - D.lifted * next.X);
  CHECK(d.a == doctest::Approx(a).epsilon(1e-12));
  CHECK(d.b == doctest::Approx((gp - gn).squaredNorm()).epsilon(1e-12));
  CHECK(d.w == doctest::Approx(gn.dot(gp)).epsilon(1e-12));
  CHECK(d.a_tilde == doctest::Approx(a + 0.5 * prev.s * gn.dot(gp)).epsilon(1e-12));
  CHECK(d.b_tilde == doctest::Approx(gp.squaredNorm() + gn.squaredNorm()).epsilon(1e-12));
  CHECK(d.r == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("initial diagnostics: a_1 = 0, b_1 = 2 ||G_1||^2") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  std::mt19937_64 rng(14);
  const auto st = dagm::init(fx.obj, fx.graph, oracle::gaussian(10, rng), 1.0, 0.1);
  const auto d = dagm::initial_diagnostics(st, fx.opt.f_star, fx.opt.grad_at_opt);
  CHECK(d.a == 0.0);
  CHECK(d.b == doctest::Approx(2.0 * st.direction().squaredNorm()));
  CHECK(d.step_case == dagm::StepCase::initial);
}

TEST_CASE("case selection and safeguard") {
  dagm::StepDiagnostics d;
  d.a = 1.0;
  d.b = 2.0;
  d.a_tilde = 3.0;
  d.b_tilde = 4.0;
  d.r = -1.0;
  const double A = 2.0, th = 1.5;

  d.w = -1.0;
  d.r = 0.5;
  CHECK(dagm::select_stepsize(d, 0.1, A, th, 10.0) == doctest::Approx(2.0));  // 4a/b
  CHECK(d.step_case == dagm::StepCase::w_nonpos_r_nonneg);
  CHECK_FALSE(d.fallback);
  CHECK(d.monotonicity_ok);

  d.r = -1.0;
  CHECK(dagm::select_stepsize(d, 0.1, A, th, 10.0) == doctest::Approx(8.0 / 5.5));  // 4Aa/(Ab + th(-r))
  CHECK(d.step_case == dagm::StepCase::w_nonpos_r_neg);

  d.w = 1.0;
  d.r = 0.0;  // tie goes to r >= 0
  CHECK(dagm::select_stepsize(d, 0.1, A, th, 10.0) == doctest::Approx(3.0));  // 4a~/b~
  CHECK(d.step_case == dagm::StepCase::w_pos_r_nonneg);

  d.r = -2.0;
  CHECK(dagm::select_stepsize(d, 0.1, A, th, 10.0) == doctest::Approx(24.0 / 11.0));
  CHECK(d.step_case == dagm::StepCase::w_pos_r_neg);

  // Cap binds.
  CHECK(dagm::select_stepsize(d, 0.1, A, th, 0.5) == 0.5);
  CHECK_FALSE(d.fallback);

  // Bound below s_k: keep s_k, flagged.
  CHECK(dagm::select_stepsize(d, 2.5, A, th, 10.0) == 2.5);
  CHECK(d.fallback);
  CHECK(d.monotonicity_ok);

  // Non-positive bound with s_k = 0 falls back to the cap.
  d.a = -1.0;
  d.a_tilde = -1.0;
  CHECK(dagm::select_stepsize(d, 0.0, A, th, 0.7) == 0.7);
  CHECK(d.fallback);

  // Cap below s_k: the step must shrink, which breaks monotonicity.
  d.a_tilde = 3.0;
  CHECK(dagm::select_stepsize(d, 1.0, A, th, 0.4) == 0.4);
  CHECK_FALSE(d.monotonicity_ok);
}

TEST_CASE("smoothness cap") {
  auto fx = make_fixture(dagm::OffsetMode::shared);
  const double lam = fx.graph.spectrum().lambda_max;
  // With L_f <= 1.5 and lambda_max ~ 3.6 the Laplacian term dominates.
  CHECK(dagm::smoothness_cap(1, 1.0, 0.1, fx.obj, fx.graph) == doctest::Approx(1.0 / lam));
  const double big = std::pow(0.01, -0.5) * fx.obj.smoothness();
  CHECK(dagm::smoothness_cap(1, 0.01, 0.5, fx.obj, fx.graph) == doctest::Approx(1.0 / std::max(lam, big)));
  CHECK_THROWS_AS(dagm::smoothness_cap(0, 1.0, 0.1, fx.obj, fx.graph), dagm::InvalidArgument);
}

TEST_CASE("Lyapunov value at the optimum and V'_0") {
  auto fx = make_fixture(dagm::OffsetMode::shared);
  auto st = dagm::init(fx.obj, fx.graph, fx.opt.stacked, 1.0, 0.1, 0.3);
  dagm::step(st, fx.obj, fx.graph, 0.3);
  CHECK(dagm::lyapunov(st, fx.opt).value == 0.0);
  st.s = 0.0;
  CHECK(std::isnan(dagm::lyapunov(st, fx.opt).value));
  const Vector x0 = Vector::Ones(10);
  const auto v0 = dagm::lyapunov_initial(x0, fx.opt, 0.5);
  CHECK(v0.value == doctest::Approx((x0 - fx.opt.stacked).squaredNorm() / 0.5));
  CHECK_THROWS_AS(dagm::lyapunov_initial(x0, fx.opt, 0.0), dagm::InvalidArgument);
}

TEST_CASE("adaptive run: trace layout and certificates") {
  auto fx = make_fixture(dagm::OffsetMode::shared);
  std::mt19937_64 rng(15);
  const Vector x0 = oracle::gaussian(10, rng);
  dagm::AgmRunOptions opt;
  opt.iters = 2000;
  const auto tr = dagm::adaptive_run(fx.obj, fx.graph, x0, fx.opt, opt);
  REQUIRE(tr.records.size() == 2001);
  CHECK(tr.records[0].k == 0);
  CHECK(tr.records[0].step == 0.0);
  CHECK(tr.records[1].step_case == "initial");
  CHECK(tr.s_ref > 0.0);
  CHECK(tr.records[0].lyapunov == doctest::Approx((x0 - fx.opt.stacked).squaredNorm() / tr.s_ref));
  CHECK(tr.records[1].lyapunov <= tr.records[0].lyapunov);
  for (std::size_t k = 1; k + 1 < tr.records.size(); ++k) {
    CHECK(tr.records[k + 1].lyapunov <= tr.records[k].lyapunov * (1 + 1e-9));
    CHECK(tr.records[k + 1].step >= tr.records[k].step);
    CHECK_FALSE(*tr.records[k + 1].fallback);
  }
  CHECK(tr.back().f_gap_plus < 1e-6 * tr.records[0].f_gap);

  opt.iters = 1;
  const auto one = dagm::adaptive_run(fx.obj, fx.graph, x0, fx.opt, opt);
  CHECK(one.records.size() == 2);
}

TEST_CASE("fixed-step run diverges visibly when s exceeds the cap") {
  auto fx = make_fixture(dagm::OffsetMode::shared);
  dagm::AgmRunOptions opt;
  opt.h = 3.0;  // s = 9, far beyond 1/lambda_max
  opt.iters = 500;
  const auto tr = dagm::fixed_step_run(fx.obj, fx.graph, Vector::Ones(10), fx.opt, opt);
  CHECK(tr.diverged);
  CHECK(tr.divergence_index > 1);
  CHECK(tr.records.size() < 502);

  opt.h = 0.5;
  const auto ok = dagm::fixed_step_run(fx.obj, fx.graph, Vector::Ones(10), fx.opt, opt);
  CHECK_FALSE(ok.diverged);
  CHECK(ok.records.size() == 501);
  CHECK(ok.records[5].step == 0.25);
  CHECK(ok.records[5].step_case == "fixed");
}

TEST_CASE("practical oracle drops grad F(X*) from r") {
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  dagm::AgmRunOptions opt;
  opt.iters = 50;
  opt.oracle = dagm::OracleMode::practical;
  const auto tr = dagm::adaptive_run(fx.obj, fx.graph, Vector::Ones(10), fx.opt, opt);
  CHECK(tr.approximate_oracle);
  for (std::size_t k = 1; k < tr.records.size(); ++k) CHECK(tr.records[k].r == 0.0);
  CHECK(dagm::oracle_mode_from_string("practical") == dagm::OracleMode::practical);
  CHECK_THROWS_AS(dagm::oracle_mode_from_string("magic"), dagm::InvalidArgument);
}

TEST_CASE("heterogeneous minimizers: F dips below F* away from consensus") {
  // Stacking each agent's own minimizer gives F = 0 < F*, so F - F* is not a
  // distance to the solution off consensus and the energy/Lyapunov arguments
  // only bite once the Laplacian term has pulled the agents together.
  auto fx = make_fixture(dagm::OffsetMode::heterogeneous);
  Vector own(10);
  for (int i = 0; i < 5; ++i) own.segment(2 * i, 2) = dynamic_cast<const dagm::QuadraticLocal&>(fx.obj.local(i)).offset();
  CHECK(fx.obj.value(own) == 0.0);
  CHECK(fx.opt.f_star > 0.0);
}
