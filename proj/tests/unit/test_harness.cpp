#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dagm/config.hpp"
#include "dagm/error.hpp"
#include "dagm/harness.hpp"
#include "dagm/trace.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCompare = R"(
name: harness-test
seed: 5
problem:
  kind: quadratic
  dim: 2
  min_eig: 0.05
  offsets: shared
graph:
  kind: ring
  agents: 5
iters: 3000
gap_threshold: 1.0e-6
algorithms:
  - name: dist-agm
    mode: adaptive
    h: 1
    beta: 0.1
  - name: dgd
    alpha: 0.001
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dagm_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("trace CSV round trip") {
  dagm::RunTrace t;
  t.algorithm = "x";
  t.f_star = 0.25;
  dagm::TraceRecord r;
  r.k = 0;
  r.f_gap = 1.5;
  t.records.push_back(r);
  r.k = 1;
  r.f_gap = 0.1;
  r.step_case = "w<=0;r>=0";
  r.fallback = false;
  t.records.push_back(r);
  std::stringstream s;
  dagm::write_trace_csv(s, t);
  const auto table = dagm::read_csv(s);
  CHECK(table.header == dagm::trace_columns());
  CHECK(table.meta("f_star") == "0.25");
  CHECK(table.rows.size() == 2);
  const auto gap = table.numeric("F_gap");
  CHECK(gap[1] == 0.1);
  CHECK(std::isnan(table.numeric("s_k")[0]));
  CHECK(table.rows[1].size() == table.header.size());
  CHECK(table.rows[1][table.column("case")] == "w<=0;r>=0");
  CHECK(table.rows[1][table.column("fallback_flag")] == "0");
  CHECK(dagm::format_number(0.1) == "0.1");
  CHECK(table.column("nope") == -1);
}

TEST_CASE("compare on a quadratic: Dist-AGM beats DGD to a tight threshold") {
  const auto cfg = dagm::parse_config(kCompare);
  const auto problem = dagm::build_problem(cfg);
  const auto traces = dagm::run_all(cfg, problem);
  const long agm = dagm::iterations_to_threshold(traces[0], 1e-6);
  const long dgd = dagm::iterations_to_threshold(traces[1], 1e-6);
  CHECK(agm > 0);
  CHECK((dgd < 0 || agm < dgd));
  const auto s = dagm::summarize("dist-agm", traces[0], 1e-6);
  CHECK(s.iterations_to_threshold == agm);
  CHECK(s.fallbacks == 0);
}

TEST_CASE("run twice: byte-identical traces; timings kept apart") {
  auto cfg = dagm::parse_config(kCompare);
  cfg.iters = 200;
  std::ostringstream log;
  const auto a = scratch("det_a"), b = scratch("det_b");
  CHECK(dagm::cmd_compare(cfg, a, log) == dagm::kExitOk);
  CHECK(dagm::cmd_compare(cfg, b, log) == dagm::kExitOk);
  for (const char* f : {"dist-agm.csv", "dgd.csv", "summary.csv", "compare_F_gap.csv", "ranking.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "timings.csv"));
  const auto trace = dagm::read_csv(a / "dist-agm.csv");
  CHECK(trace.rows.size() == 201);
  CHECK(trace.meta("config_hash") == dagm::config_hash(cfg));

  // Identical entries give identical columns.
  cfg.algorithms[1] = cfg.algorithms[0];
  cfg.algorithms[1].label = "twin";
  CHECK(dagm::cmd_compare(cfg, a, log) == dagm::kExitOk);
  const auto cmp = dagm::read_csv(a / "compare_F_gap.csv");
  CHECK(cmp.numeric("dist-agm") == cmp.numeric("twin"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("exit codes") {
  std::ostringstream log;
  auto cfg = dagm::parse_config(kCompare);
  cfg.iters = 300;
  cfg.algorithms[1].alpha = 100.0;  // DGD blows up
  const auto dir = scratch("exit");
  CHECK(dagm::cmd_run(cfg, dir, log) == dagm::kExitDiverged);
  CHECK(fs::exists(dir / "dgd.csv"));
  cfg.algorithms.pop_back();
  CHECK_THROWS_AS(dagm::cmd_compare(cfg, dir, log), dagm::ConfigError);
  CHECK_THROWS_AS(dagm::cmd_energy_check(cfg, dir, log), dagm::ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("rate-check on a synthetic 1/k^2 trace") {
  const auto dir = scratch("rate");
  fs::create_directories(dir);
  std::ofstream out(dir / "t.csv");
  out << "k,F_gap\n0,1\n";
  for (int k = 1; k <= 1000; ++k) out << k << ',' << 1.0 / (double(k) * k) << '\n';
  out.close();
  std::ostringstream log;
  dagm::RateCheckOptions opt;
  opt.beta = 0.01;
  CHECK(dagm::cmd_rate_check(dir / "t.csv", opt, log) == dagm::kExitOk);
  CHECK(log.str().find("slope -2.0000") != std::string::npos);

  // beta = 0.5 targets -1.5; a -1.1 trace fails.
  std::ofstream slow(dir / "s.csv");
  slow << "k,F_gap\n";
  for (int k = 1; k <= 1000; ++k) slow << k << ',' << std::pow(k, -1.1) << '\n';
  slow.close();
  opt.beta = 0.5;
  CHECK(dagm::cmd_rate_check(dir / "s.csv", opt, log) == dagm::kExitCheckFailed);
  fs::remove_all(dir);
}

TEST_CASE("energy-check writes a flow CSV") {
  auto cfg = dagm::parse_config(std::string(kCompare) + R"(flow:
  t0: 1
  dt: 1.0e-2
  horizon: 6
  record_every: 10
)");
  const auto dir = scratch("energy");
  std::ostringstream log;
  CHECK(dagm::cmd_energy_check(cfg, dir, log) == dagm::kExitOk);
  const auto flow = dagm::read_csv(dir / "flow.csv");
  CHECK(flow.column("E_int_bregman") >= 0);
  CHECK(flow.rows.size() == 51);
  fs::remove_all(dir);
}

TEST_CASE("MNIST fallback and requirement") {
  auto cfg = dagm::parse_config(R"(
problem:
  kind: logistic-mnist
  cap: 40
  data_dir: /nonexistent
graph:
  kind: ring
  agents: 4
algorithms:
  - name: dgd
)");
  const auto p = dagm::build_problem(cfg);
  CHECK(p.data_source.find("synthetic") != std::string::npos);
  CHECK(p.objective.dim() == 785);
  cfg.problem.require_mnist = true;
  CHECK_THROWS_AS(dagm::build_problem(cfg), dagm::ConfigError);
}
