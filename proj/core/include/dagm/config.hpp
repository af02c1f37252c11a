#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dagm/agm.hpp"
#include "dagm/baselines.hpp"
#include "dagm/flow.hpp"
#include "dagm/graph.hpp"
#include "dagm/objective.hpp"

namespace dagm {

enum class ProblemKind { quadratic, logistic_synthetic, logistic_mnist };
std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

struct ProblemConfig {
  ProblemKind kind = ProblemKind::quadratic;
  QuadraticSpec quadratic;
  // logistic problems
  double l2 = 1e-4;
  std::size_t samples = 500;  // synthetic sample count
  int features = 20;          // synthetic feature count
  double separation = 1.0;
  std::size_t cap = 500;      // MNIST subsample size
  int positive_digit = 5;
  int negative_digit = 1;
  /// MNIST directory; empty means $DAGM_DATA_DIR. Falls back to synthetic data when absent.
  std::string data_dir;
  bool require_mnist = false;
  std::uint64_t seed = 0;
};

enum class InitMode { random, optimum };

struct InitConfig {
  InitMode mode = InitMode::random;
  double stddev = 1.0;
  std::uint64_t seed = 0;
};

/// One entry of the algorithm list. Dist-AGM uses mode/h/beta/oracle/step,
/// the baselines use alpha/beta_gain/h_step.
struct AlgorithmConfig {
  std::string name;   // dist-agm | dgd | diging | pi-consensus
  std::string label;  // unique output name (defaults to name)
  std::string mode = "adaptive";
  double h = 10.0;
  double beta = 0.1;
  OracleMode oracle = OracleMode::exact;
  double step = kNull;
  double alpha = 0.001;
  double beta_gain = 0.1;
  double h_step = 0.1;

  bool is_dist_agm() const { return name == "dist-agm"; }
};

struct FlowConfig {
  FlowParams params;
  /// "zero" or "kinetic-free" (V0 = -2 (X0 - X*) / t0).
  std::string v0 = "zero";
  /// Energy-drift and negativity tolerances used by energy-check.
  double drift_tolerance = 1e-3;
  double negativity_tolerance = 1e-9;
};

struct RateConfig {
  double from = 100.0;
  double to = 1e4;
  double tolerance = 0.3;
  bool log_uniform = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  ProblemConfig problem;
  TopologySpec graph;
  InitConfig init;
  SolverOptions solver;
  long iters = 1000;
  /// Relative gap threshold for iterations-to-threshold: |F - F*| <= threshold * |F(X0) - F*|.
  double gap_threshold = 1e-3;
  std::vector<AlgorithmConfig> algorithms;
  std::optional<FlowConfig> flow;
  RateConfig rate;
  /// Section seeds given explicitly in the file (others derive from `seed`).
  struct {
    bool problem = false;
    bool graph = false;
    bool init = false;
  } explicit_seeds;

  void validate() const;
  /// Replaces the top-level seed and every section seed that was derived from it.
  void override_seed(std::uint64_t seed);
};

/// Parses YAML text. Throws ConfigError on unknown keys, bad types or invalid values.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical key=value rendering of every resolved field.
std::string canonical_dump(const ExperimentConfig& config);
/// FNV-1a (64 bit) of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace dagm
