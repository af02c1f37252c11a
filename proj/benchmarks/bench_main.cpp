#include <benchmark/benchmark.h>

#include "dagm/agm.hpp"
#include "dagm/baselines.hpp"
#include "dagm/data_io.hpp"
#include "dagm/flow.hpp"
#include "dagm/graph.hpp"
#include "dagm/objective.hpp"

namespace {

dagm::SeparableObjective quadratic(int agents, int dim) {
  dagm::QuadraticSpec spec;
  spec.agents = agents;
  spec.dim = dim;
  spec.seed = 3;
  return dagm::make_quadratic(spec);
}

void BM_LiftedLaplacian(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int d = 64;
  const auto graph = dagm::build_topology({dagm::TopologyKind::ring, m});
  const dagm::Vector x = dagm::Vector::Random(static_cast<Eigen::Index>(m) * d);
  dagm::Vector out;
  for (auto _ : state) {
    dagm::apply_lifted_laplacian(graph, d, x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_LiftedLaplacian)->Arg(5)->Arg(50)->Arg(500);

void BM_AgmStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto obj = quadratic(5, d);
  const auto graph = dagm::build_topology({dagm::TopologyKind::ring, 5});
  const dagm::Vector x0 = dagm::Vector::Ones(obj.stacked_size());
  auto s = dagm::init(obj, graph, x0, 1.0, 0.1, 1e-3);
  for (auto _ : state) {
    dagm::step(s, obj, graph, 1e-3);
    if (s.k > 100000) s = dagm::init(obj, graph, x0, 1.0, 0.1, 1e-3);
  }
}
BENCHMARK(BM_AgmStep)->Arg(2)->Arg(32)->Arg(256);

void BM_AdaptiveRun(benchmark::State& state) {
  const auto obj = quadratic(5, 2);
  const auto graph = dagm::build_topology({dagm::TopologyKind::ring, 5});
  const auto opt = dagm::make_consensus_optimum(obj, *obj.closed_form_minimizer());
  const dagm::Vector x0 = dagm::Vector::Ones(obj.stacked_size());
  dagm::AgmRunOptions options;
  options.iters = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(dagm::adaptive_run(obj, graph, x0, opt, options));
}
BENCHMARK(BM_AdaptiveRun)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DigingRun(benchmark::State& state) {
  const auto obj = quadratic(5, 2);
  const auto graph = dagm::build_topology({dagm::TopologyKind::ring, 5});
  const auto opt = dagm::make_consensus_optimum(obj, *obj.closed_form_minimizer());
  const dagm::Vector x0 = dagm::Vector::Ones(obj.stacked_size());
  dagm::BaselineOptions options;
  options.kind = dagm::BaselineKind::diging;
  options.iters = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(dagm::diging_run(obj, graph, x0, opt, options));
}
BENCHMARK(BM_DigingRun)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FlowRk4(benchmark::State& state) {
  const auto obj = quadratic(5, 2);
  const auto graph = dagm::build_topology({dagm::TopologyKind::ring, 5});
  const auto opt = dagm::make_consensus_optimum(obj, *obj.closed_form_minimizer());
  const dagm::Vector x0 = dagm::Vector::Ones(obj.stacked_size());
  dagm::FlowParams p;
  p.t0 = 1.0;
  p.horizon = 11.0;
  p.record_every = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(dagm::integrate(p, obj, graph, opt, x0, dagm::Vector::Zero(x0.size())));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_FlowRk4)->Unit(benchmark::kMillisecond);

void BM_LogisticGradient(benchmark::State& state) {
  const auto ds = dagm::make_gaussian_dataset(500, 784, 1.0, 1);
  const auto obj = dagm::make_logistic(dagm::shard(ds, 5, 1), 1e-4);
  const dagm::Vector x = dagm::Vector::Zero(obj.stacked_size());
  dagm::Vector g;
  for (auto _ : state) {
    obj.gradient(x, g);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_LogisticGradient);

}  // namespace

BENCHMARK_MAIN();
