#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dagm/config.hpp"
#include "dagm/flow.hpp"
#include "dagm/rate.hpp"
#include "dagm/trace.hpp"

namespace dagm {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitDiverged = 3,
};

/// A fully materialised problem instance.
struct Problem {
  SeparableObjective objective;
  AgentGraph graph;
  ConsensusOptimum optimum;
  Vector x0;
  std::string data_source;
  /// The reference solver hit its iteration cap; F* is the best value found.
  bool optimum_approximate = false;
};

/// Directory holding the MNIST IDX files: problem.data_dir, else $DAGM_DATA_DIR, else "data".
std::filesystem::path resolve_data_dir(const ProblemConfig& problem);

Problem build_problem(const ExperimentConfig& config);

/// X0 = X* (optimum mode) or i.i.d. N(0, stddev^2) entries drawn from init.seed.
Vector initial_state(const InitConfig& init, const ConsensusOptimum& optimum);

RunTrace run_algorithm(const AlgorithmConfig& algorithm, const Problem& problem, long iters);

/// Runs every configured algorithm concurrently; results follow the config order.
std::vector<RunTrace> run_all(const ExperimentConfig& config, const Problem& problem,
                              std::vector<double>* wall_seconds = nullptr);

/// First k with |F(X_k) - F*| <= threshold * |F(X_0) - F*|, or -1.
long iterations_to_threshold(const RunTrace& trace, double threshold);

struct RunSummary {
  std::string label;
  std::string algorithm;
  long iterations = 0;
  double final_gap = kNull;
  double final_gap_plus = kNull;
  double final_grad_norm = kNull;
  double final_laplacian_norm = kNull;
  long iterations_to_threshold = -1;
  bool diverged = false;
  long fallbacks = 0;
  long monotonicity_violations = 0;
};

RunSummary summarize(const std::string& label, const RunTrace& trace, double threshold);

void write_summary_csv(const std::filesystem::path& path, const std::vector<RunSummary>& rows,
                       const std::string& hash);

/// One CSV per metric (F_gap, grad_norm, laplacian_norm) with one column per
/// run, aligned on k; runs that stopped early leave empty cells.
void write_comparison_csvs(const std::filesystem::path& directory, const std::vector<std::string>& labels,
                           const std::vector<RunTrace>& traces, const std::string& hash);

void write_flow_csv(std::ostream& out, const FlowTrajectory& trajectory,
                    const std::vector<std::pair<std::string, std::string>>& metadata);
void write_flow_csv(const std::filesystem::path& path, const FlowTrajectory& trajectory,
                    const std::vector<std::pair<std::string, std::string>>& metadata);

/// V0 according to flow.v0 ("zero" or "kinetic-free").
Vector initial_velocity(const FlowConfig& flow, const Vector& x0, const ConsensusOptimum& optimum);

struct RateCheckOptions {
  double beta = 0.1;
  /// Tail fraction; used when from/to are not both positive.
  double window = 0.5;
  double from = 0.0;
  double to = 0.0;
  double tolerance = 0.2;
  double min_r_squared = 0.0;
  bool log_uniform = false;
  bool envelope = false;
};

struct RateReport {
  SlopeFit fit;
  double target = 0.0;
  std::string column;
  bool pass = false;
};

/// Fits the gap column of a trace or flow CSV (F_gap_plus if present, else
/// F_gap) against its index column (k or t). Pass iff slope <= target + tolerance
/// and R^2 >= min_r_squared.
RateReport rate_check(const CsvTable& table, const RateCheckOptions& options);

struct EnergyReport {
  EnergyAudit audit;
  bool blew_up = false;
  double last_valid_time = kNull;
  bool pass = false;
};

EnergyReport energy_check(const FlowConfig& flow, const Problem& problem, FlowTrajectory* trajectory = nullptr);

int cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_rate_check(const std::filesystem::path& trace_path, const RateCheckOptions& options, std::ostream& log);
int cmd_energy_check(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace dagm
