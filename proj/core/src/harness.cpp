#include "dagm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dagm/agm.hpp"
#include "dagm/baselines.hpp"
#include "dagm/data_io.hpp"
#include "dagm/error.hpp"

namespace dagm {

namespace fs = std::filesystem;

std::filesystem::path resolve_data_dir(const ProblemConfig& problem) {
  if (!problem.data_dir.empty()) return problem.data_dir;
  if (const char* env = std::getenv("DAGM_DATA_DIR"); env && *env) return env;
  return "data";
}

namespace {

struct Objective {
  SeparableObjective objective;
  std::string source;
};

Objective make_objective(const ExperimentConfig& cfg) {
  const ProblemConfig& p = cfg.problem;
  switch (p.kind) {
    case ProblemKind::quadratic: {
      QuadraticSpec spec = p.quadratic;
      spec.agents = cfg.graph.agents;
      spec.seed = p.seed;
      return {make_quadratic(spec), "quadratic"};
    }
    case ProblemKind::logistic_synthetic: {
      auto ds = make_gaussian_dataset(p.samples, p.features, p.separation, p.seed);
      const std::string source = ds.source;
      return {make_logistic(shard(ds, cfg.graph.agents, p.seed), p.l2), source};
    }
    case ProblemKind::logistic_mnist: {
      const fs::path dir = resolve_data_dir(p);
      LabeledDataset ds;
      if (mnist_files_present(dir)) {
        ds = load_mnist_binary(dir, BinaryDigitOptions{p.positive_digit, p.negative_digit, p.cap, p.seed});
      } else if (p.require_mnist) {
        throw ConfigError("MNIST files not found in " + dir.string());
      } else {
        // Same shape as the digit task (784 pixels), separable by construction.
        ds = make_gaussian_dataset(p.cap, 784, p.separation, p.seed);
        ds.source = "synthetic fallback (no MNIST in " + dir.string() + "): " + ds.source;
      }
      const std::string source = ds.source;
      return {make_logistic(shard(ds, cfg.graph.agents, p.seed), p.l2), source};
    }
  }
  throw ConfigError("unknown problem kind");
}

ConsensusOptimum make_optimum(const SeparableObjective& objective, const SolverOptions& solver, bool& approximate) {
  approximate = false;
  if (const auto& x = objective.closed_form_minimizer()) return make_consensus_optimum(objective, *x);
  try {
    return solve_consensus_optimum(objective, solver);
  } catch (const NonConvergenceError& e) {
    approximate = true;
    return e.best();
  }
}

}  // namespace

Vector initial_state(const InitConfig& init, const ConsensusOptimum& optimum) {
  if (init.mode == InitMode::optimum) return optimum.stacked;
  std::mt19937_64 rng(init.seed);
  std::normal_distribution<double> normal(0.0, init.stddev);
  Vector x(optimum.stacked.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = init.stddev > 0.0 ? normal(rng) : 0.0;
  return x;
}

Problem build_problem(const ExperimentConfig& config) {
  Objective obj = make_objective(config);
  AgentGraph graph = build_topology(config.graph);
  bool approximate = false;
  ConsensusOptimum optimum = make_optimum(obj.objective, config.solver, approximate);
  Vector x0 = initial_state(config.init, optimum);
  return Problem{std::move(obj.objective), std::move(graph), std::move(optimum), std::move(x0),
                 std::move(obj.source), approximate};
}

RunTrace run_algorithm(const AlgorithmConfig& a, const Problem& p, long iters) {
  if (a.is_dist_agm()) {
    AgmRunOptions options;
    options.h = a.h;
    options.beta = a.beta;
    options.iters = iters;
    options.step = a.step;
    options.oracle = a.oracle;
    return a.mode == "fixed" ? fixed_step_run(p.objective, p.graph, p.x0, p.optimum, options)
                             : adaptive_run(p.objective, p.graph, p.x0, p.optimum, options);
  }
  BaselineOptions options;
  options.kind = baseline_kind_from_string(a.name);
  options.iters = iters;
  options.alpha = a.alpha;
  options.beta_gain = a.beta_gain;
  options.h_step = a.h_step;
  RunTrace trace = baseline_run(p.objective, p.graph, p.x0, p.optimum, options);
  trace.metadata.emplace_back("alpha", format_number(a.alpha));
  if (options.kind == BaselineKind::pi_consensus) {
    trace.metadata.emplace_back("beta_gain", format_number(a.beta_gain));
    trace.metadata.emplace_back("h_step", format_number(a.h_step));
  }
  return trace;
}

std::vector<RunTrace> run_all(const ExperimentConfig& config, const Problem& problem,
                              std::vector<double>* wall_seconds) {
  using clock = std::chrono::steady_clock;
  std::vector<std::future<std::pair<RunTrace, double>>> jobs;
  jobs.reserve(config.algorithms.size());
  for (const auto& a : config.algorithms) {
    jobs.push_back(std::async(std::launch::async, [&a, &problem, iters = config.iters] {
      const auto start = clock::now();
      RunTrace trace = run_algorithm(a, problem, iters);
      return std::pair{std::move(trace), std::chrono::duration<double>(clock::now() - start).count()};
    }));
  }
  std::vector<RunTrace> traces;
  for (auto& job : jobs) {
    auto [trace, seconds] = job.get();
    traces.push_back(std::move(trace));
    if (wall_seconds) wall_seconds->push_back(seconds);
  }
  return traces;
}

long iterations_to_threshold(const RunTrace& trace, double threshold) {
  if (trace.records.empty()) return -1;
  const double target = threshold * std::abs(trace.records.front().f_gap);
  for (const auto& r : trace.records) {
    if (std::abs(r.f_gap) <= target) return r.k;
  }
  return -1;
}

RunSummary summarize(const std::string& label, const RunTrace& trace, double threshold) {
  RunSummary s;
  s.label = label;
  s.algorithm = trace.algorithm;
  s.diverged = trace.diverged;
  if (!trace.records.empty()) {
    const auto& last = trace.back();
    s.iterations = last.k;
    s.final_gap = last.f_gap;
    s.final_gap_plus = last.f_gap_plus;
    s.final_grad_norm = last.grad_norm;
    s.final_laplacian_norm = last.laplacian_norm;
  }
  s.iterations_to_threshold = iterations_to_threshold(trace, threshold);
  for (const auto& r : trace.records) {
    if (r.fallback.value_or(false)) ++s.fallbacks;
    if (!r.monotonicity_ok.value_or(true)) ++s.monotonicity_violations;
  }
  return s;
}

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string format_index(long k) { return k < 0 ? std::string{} : std::to_string(k); }

}  // namespace

void write_summary_csv(const fs::path& path, const std::vector<RunSummary>& rows, const std::string& hash) {
  auto out = open_output(path);
  out << "# config_hash: " << hash << '\n';
  out << "label,algorithm,iterations,final_F_gap,final_F_gap_plus,final_grad_norm,final_laplacian_norm,"
         "iterations_to_threshold,diverged,fallbacks,monotonicity_violations\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.algorithm << ',' << r.iterations << ',' << format_number(r.final_gap) << ','
        << format_number(r.final_gap_plus) << ',' << format_number(r.final_grad_norm) << ','
        << format_number(r.final_laplacian_norm) << ',' << format_index(r.iterations_to_threshold) << ','
        << (r.diverged ? 1 : 0) << ',' << r.fallbacks << ',' << r.monotonicity_violations << '\n';
  }
}

void write_comparison_csvs(const fs::path& directory, const std::vector<std::string>& labels,
                           const std::vector<RunTrace>& traces, const std::string& hash) {
  if (labels.size() != traces.size()) throw InvalidArgument("one label per trace required");
  std::size_t rows = 0;
  for (const auto& t : traces) rows = std::max(rows, t.records.size());
  const std::pair<const char*, double TraceRecord::*> metrics[] = {
      {"F_gap", &TraceRecord::f_gap},
      {"grad_norm", &TraceRecord::grad_norm},
      {"laplacian_norm", &TraceRecord::laplacian_norm},
  };
  for (const auto& [name, field] : metrics) {
    auto out = open_output(directory / fmt::format("compare_{}.csv", name));
    out << "# config_hash: " << hash << '\n';
    out << "# metric: " << name << '\n';
    out << 'k';
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (std::size_t k = 0; k < rows; ++k) {
      out << k;
      for (const auto& t : traces) {
        out << ',';
        if (k < t.records.size()) out << format_number(t.records[k].*field);
      }
      out << '\n';
    }
  }
}

void write_flow_csv(std::ostream& out, const FlowTrajectory& trajectory,
                    const std::vector<std::pair<std::string, std::string>>& metadata) {
  for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << '\n';
  out << "t,F_gap,grad_norm,laplacian_norm,E_total,E_kinetic,E_laplacian,E_potential,E_int_laplacian,"
         "E_int_bregman,E_int_beta\n";
  for (const auto& s : trajectory.samples) {
    const auto& e = s.energy;
    out << format_number(s.t) << ',' << format_number(s.f_gap) << ',' << format_number(s.grad_norm) << ','
        << format_number(s.laplacian_norm) << ',' << format_number(e.total()) << ',' << format_number(e.kinetic)
        << ',' << format_number(e.laplacian_term) << ',' << format_number(e.potential_term) << ','
        << format_number(e.integral_laplacian) << ',' << format_number(e.integral_bregman) << ','
        << format_number(e.integral_beta) << '\n';
  }
}

void write_flow_csv(const fs::path& path, const FlowTrajectory& trajectory,
                    const std::vector<std::pair<std::string, std::string>>& metadata) {
  auto out = open_output(path);
  write_flow_csv(out, trajectory, metadata);
}

Vector initial_velocity(const FlowConfig& flow, const Vector& x0, const ConsensusOptimum& optimum) {
  if (flow.v0 == "kinetic-free") return (-2.0 / flow.params.t0) * (x0 - optimum.stacked);
  return Vector::Zero(x0.size());
}

RateReport rate_check(const CsvTable& table, const RateCheckOptions& options) {
  RateReport report;
  const std::string index_column = table.column("k") >= 0 ? "k" : "t";
  if (table.column(index_column) < 0) throw InvalidArgument("trace has neither a k nor a t column");
  report.column = table.column("F_gap_plus") >= 0 ? "F_gap_plus" : "F_gap";
  if (table.column(report.column) < 0) throw InvalidArgument("trace has no gap column");
  std::vector<double> index = table.numeric(index_column);
  std::vector<double> gap = table.numeric(report.column);
  // The k = 0 row of discrete traces cannot enter a log-log fit.
  if (!index.empty() && index.front() <= 0.0) {
    index.erase(index.begin());
    gap.erase(gap.begin());
  }
  if (options.from > 0.0 && options.to > options.from) {
    SlopeFitOptions fit_options;
    fit_options.from = options.from;
    fit_options.to = options.to;
    fit_options.log_uniform = options.log_uniform;
    fit_options.envelope = options.envelope;
    report.fit = rate_slope_range(index, gap, fit_options);
  } else {
    report.fit = rate_slope(index, gap, options.window);
  }
  report.target = -(2.0 - options.beta);
  report.pass = report.fit.slope <= report.target + options.tolerance && report.fit.r_squared >= options.min_r_squared;
  return report;
}

EnergyReport energy_check(const FlowConfig& flow, const Problem& problem, FlowTrajectory* trajectory) {
  EnergyReport report;
  try {
    FlowTrajectory traj = integrate(flow.params, problem.objective, problem.graph, problem.optimum, problem.x0,
                                    initial_velocity(flow, problem.x0, problem.optimum));
    report.audit = audit_energy(traj, flow.params.beta, flow.negativity_tolerance);
    report.pass = report.audit.max_relative_drift <= flow.drift_tolerance && report.audit.negative_components == 0;
    if (trajectory) *trajectory = std::move(traj);
  } catch (const DivergenceError& e) {
    report.blew_up = true;
    report.last_valid_time = e.last_valid_time();
    report.pass = false;
  }
  return report;
}

namespace {

std::vector<std::pair<std::string, std::string>> common_metadata(const ExperimentConfig& config,
                                                                 const Problem& problem, const std::string& hash) {
  std::vector<std::pair<std::string, std::string>> meta{
      {"config", config.name},
      {"config_hash", hash},
      {"seed", std::to_string(config.seed)},
      {"graph", fmt::format("{} m={}", to_string(config.graph.kind), problem.graph.agents())},
      {"data", problem.data_source},
  };
  if (problem.optimum_approximate) meta.emplace_back("optimum", "approximate (solver iteration cap)");
  return meta;
}

struct Executed {
  std::vector<RunTrace> traces;
  std::vector<RunSummary> summaries;
  bool diverged = false;
};

Executed execute(const ExperimentConfig& config, const Problem& problem, const fs::path& out_dir,
                 const std::string& hash, std::ostream& log) {
  std::vector<double> seconds;
  Executed ex;
  ex.traces = run_all(config, problem, &seconds);
  fs::create_directories(out_dir);
  const auto meta = common_metadata(config, problem, hash);
  auto timings = open_output(out_dir / "timings.csv");
  timings << "label,wall_seconds\n";
  for (std::size_t i = 0; i < ex.traces.size(); ++i) {
    const auto& label = config.algorithms[i].label;
    RunTrace& trace = ex.traces[i];
    trace.metadata.insert(trace.metadata.begin(), meta.begin(), meta.end());
    trace.metadata.emplace_back("label", label);
    write_trace_csv(out_dir / (label + ".csv"), trace);
    ex.summaries.push_back(summarize(label, trace, config.gap_threshold));
    ex.diverged = ex.diverged || trace.diverged;
    timings << label << ',' << fmt::format("{:.6f}", seconds[i]) << '\n';
    const auto& s = ex.summaries.back();
    fmt::print(log, "{:<20} iters={:<7} F-F*={:<12.4e} |LX|={:<12.4e} to-threshold={}{}\n", label, s.iterations,
               s.final_gap, s.final_laplacian_norm,
               s.iterations_to_threshold < 0 ? std::string("never") : std::to_string(s.iterations_to_threshold),
               s.diverged ? "  DIVERGED" : "");
  }
  write_summary_csv(out_dir / "summary.csv", ex.summaries, hash);
  return ex;
}

}  // namespace

int cmd_run(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  if (config.algorithms.empty()) throw ConfigError("no algorithms configured");
  const std::string hash = config_hash(config);
  const Problem problem = build_problem(config);
  fmt::print(log, "config {} ({}), data: {}, F* = {}\n", config.name, hash, problem.data_source,
             format_number(problem.optimum.f_star));
  const Executed ex = execute(config, problem, out_dir, hash, log);
  return ex.diverged ? kExitDiverged : kExitOk;
}

int cmd_compare(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  if (config.algorithms.size() < 2) throw ConfigError("compare needs at least two algorithms");
  const std::string hash = config_hash(config);
  const Problem problem = build_problem(config);
  fmt::print(log, "config {} ({}), data: {}, F* = {}\n", config.name, hash, problem.data_source,
             format_number(problem.optimum.f_star));
  const Executed ex = execute(config, problem, out_dir, hash, log);

  std::vector<std::string> labels;
  for (const auto& a : config.algorithms) labels.push_back(a.label);
  write_comparison_csvs(out_dir, labels, ex.traces, hash);

  // Rank by iterations to threshold (never reached sorts last, then by final gap).
  std::vector<std::size_t> order(ex.summaries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = ex.summaries[a];
    const auto& sb = ex.summaries[b];
    const long ka = sa.iterations_to_threshold < 0 ? std::numeric_limits<long>::max() : sa.iterations_to_threshold;
    const long kb = sb.iterations_to_threshold < 0 ? std::numeric_limits<long>::max() : sb.iterations_to_threshold;
    if (ka != kb) return ka < kb;
    return std::abs(sa.final_gap) < std::abs(sb.final_gap);
  });
  auto table = open_output(out_dir / "ranking.csv");
  table << "# config_hash: " << hash << '\n';
  table << "# gap_threshold: " << format_number(config.gap_threshold) << '\n';
  table << "rank,label,iterations_to_threshold,final_F_gap\n";
  fmt::print(log, "ranking by iterations to |F-F*| <= {} |F(X0)-F*|:\n", format_number(config.gap_threshold));
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& s = ex.summaries[order[r]];
    table << r + 1 << ',' << s.label << ',' << format_index(s.iterations_to_threshold) << ','
          << format_number(s.final_gap) << '\n';
    fmt::print(log, "  {}. {}\n", r + 1, s.label);
  }
  return ex.diverged ? kExitDiverged : kExitOk;
}

int cmd_rate_check(const fs::path& trace_path, const RateCheckOptions& options, std::ostream& log) {
  const CsvTable table = read_csv(trace_path);
  const RateReport report = rate_check(table, options);
  fmt::print(log, "column {}: slope {:.4f} (R^2 {:.4f}, {} points{}), target {:.4f}, tolerance {} -> {}\n",
             report.column, report.fit.slope, report.fit.r_squared, report.fit.points_used,
             report.fit.truncated ? ", truncated at non-positive gap" : "", report.target,
             format_number(options.tolerance), report.pass ? "PASS" : "FAIL");
  return report.pass ? kExitOk : kExitCheckFailed;
}

int cmd_energy_check(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  if (!config.flow) throw ConfigError("energy-check needs a flow section");
  const std::string hash = config_hash(config);
  const Problem problem = build_problem(config);
  FlowTrajectory traj;
  const EnergyReport report = energy_check(*config.flow, problem, &traj);
  if (report.blew_up) {
    fmt::print(log, "flow blew up; last finite state at t = {} -> FAIL\n", format_number(report.last_valid_time));
    return kExitDiverged;
  }
  auto meta = common_metadata(config, problem, hash);
  meta.emplace_back("reference_energy", format_number(reference_energy(problem.x0, problem.optimum)));
  write_flow_csv(out_dir / "flow.csv", traj, meta);
  fmt::print(log,
             "E(t0) = {:.6e}, max relative drift {:.3e} (tolerance {}), negative components {}, "
             "max t^(2-beta)(F-F*)/E(t0) = {:.4f} -> {}\n",
             report.audit.initial_energy, report.audit.max_relative_drift, format_number(config.flow->drift_tolerance),
             report.audit.negative_components, report.audit.bound_ratio, report.pass ? "PASS" : "FAIL");
  return report.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace dagm
