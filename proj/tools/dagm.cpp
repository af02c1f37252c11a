// Command-line front end: dagm run|compare|rate-check|energy-check.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dagm/config.hpp"
#include "dagm/error.hpp"
#include "dagm/harness.hpp"

namespace {

struct ConfigArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config, "YAML experiment config")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", args.out, "output directory (overrides output_dir)");
  cmd->add_option("-s,--seed", args.seed, "override the top-level seed");
}

dagm::ExperimentConfig load(const ConfigArgs& args) {
  auto cfg = dagm::load_config(args.config);
  if (args.seed) cfg.override_seed(*args.seed);
  if (!args.out.empty()) cfg.output_dir = args.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed optimization in dilated coordinates"};
  app.require_subcommand(1);

  ConfigArgs run_args, compare_args, energy_args;
  auto* run = app.add_subcommand("run", "run every configured algorithm and write traces");
  add_config_args(run, run_args);
  auto* compare = app.add_subcommand("compare", "run and write aligned comparison tables");
  add_config_args(compare, compare_args);
  auto* energy = app.add_subcommand("energy-check", "integrate the flow and audit the energy ledger");
  add_config_args(energy, energy_args);

  std::string trace_path;
  dagm::RateCheckOptions rate;
  auto* rate_cmd = app.add_subcommand("rate-check", "fit the log-log slope of a trace's gap column");
  rate_cmd->add_option("trace", trace_path, "trace or flow CSV")->required()->check(CLI::ExistingFile);
  rate_cmd->add_option("--beta", rate.beta, "beta; the target slope is -(2 - beta)")->capture_default_str();
  rate_cmd->add_option("--window", rate.window, "tail fraction used when no range is given")->capture_default_str();
  rate_cmd->add_option("--from", rate.from, "lower end of the fit range");
  rate_cmd->add_option("--to", rate.to, "upper end of the fit range");
  rate_cmd->add_option("--tolerance", rate.tolerance, "allowed excess over the target slope")->capture_default_str();
  rate_cmd->add_option("--min-r2", rate.min_r_squared, "minimum R^2")->capture_default_str();
  rate_cmd->add_flag("--log-uniform", rate.log_uniform, "fit on log-uniformly thinned points");
  rate_cmd->add_flag("--envelope", rate.envelope, "fit the upper envelope max_{s>=t} gap(s) (needs --from/--to)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the config-error code; --help still exits 0.
    const int rc = app.exit(e);
    return rc == 0 ? dagm::kExitOk : dagm::kExitConfigError;
  }

  try {
    if (*run) {
      const auto cfg = load(run_args);
      return dagm::cmd_run(cfg, cfg.output_dir, std::cout);
    }
    if (*compare) {
      const auto cfg = load(compare_args);
      return dagm::cmd_compare(cfg, cfg.output_dir, std::cout);
    }
    if (*energy) {
      const auto cfg = load(energy_args);
      return dagm::cmd_energy_check(cfg, cfg.output_dir, std::cout);
    }
    if (*rate_cmd) return dagm::cmd_rate_check(trace_path, rate, std::cout);
  } catch (const dagm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return dagm::kExitConfigError;
  } catch (const dagm::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return dagm::kExitDiverged;
  } catch (const dagm::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dagm::kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dagm::kExitCheckFailed;
  }
  return dagm::kExitOk;
}
