#include "dagm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "dagm/error.hpp"
#include "dagm/trace.hpp"

namespace dagm {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::logistic_synthetic: return "logistic-synthetic";
    case ProblemKind::logistic_mnist: return "logistic-mnist";
  }
  return "?";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  if (name == "quadratic") return ProblemKind::quadratic;
  if (name == "logistic-synthetic") return ProblemKind::logistic_synthetic;
  if (name == "logistic-mnist") return ProblemKind::logistic_mnist;
  throw ConfigError("unknown problem kind '" + name + "'");
}

namespace {

constexpr std::uint64_t kGraphSeedOffset = 1;
constexpr std::uint64_t kInitSeedOffset = 2;

void check_keys(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(fmt::format("section '{}' must be a mapping", section));
  std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError(fmt::format("unknown key '{}' in section '{}'", key, section));
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
  const YAML::Node value = node[key];
  if (!value) return;
  try {
    out = value.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("bad value for '{}.{}'", section, key));
  }
}

bool read_seed(const YAML::Node& node, std::uint64_t& out, const std::string& section) {
  if (!node["seed"]) return false;
  read(node, "seed", out, section);
  return true;
}

void parse_problem(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "problem",
             {"kind", "dim", "min_eig", "max_eig", "jitter", "offsets", "l2", "samples", "features", "separation",
              "cap", "positive_digit", "negative_digit", "data_dir", "require_mnist", "seed"});
  ProblemConfig& p = cfg.problem;
  std::string kind = to_string(p.kind);
  read(node, "kind", kind, "problem");
  p.kind = problem_kind_from_string(kind);
  read(node, "dim", p.quadratic.dim, "problem");
  read(node, "min_eig", p.quadratic.min_eig, "problem");
  read(node, "max_eig", p.quadratic.max_eig, "problem");
  read(node, "jitter", p.quadratic.jitter, "problem");
  std::string offsets = p.quadratic.offsets == OffsetMode::shared ? "shared" : "heterogeneous";
  read(node, "offsets", offsets, "problem");
  if (offsets == "shared") {
    p.quadratic.offsets = OffsetMode::shared;
  } else if (offsets == "heterogeneous") {
    p.quadratic.offsets = OffsetMode::heterogeneous;
  } else {
    throw ConfigError("problem.offsets must be 'shared' or 'heterogeneous'");
  }
  read(node, "l2", p.l2, "problem");
  read(node, "samples", p.samples, "problem");
  read(node, "features", p.features, "problem");
  read(node, "separation", p.separation, "problem");
  read(node, "cap", p.cap, "problem");
  read(node, "positive_digit", p.positive_digit, "problem");
  read(node, "negative_digit", p.negative_digit, "problem");
  read(node, "data_dir", p.data_dir, "problem");
  read(node, "require_mnist", p.require_mnist, "problem");
  cfg.explicit_seeds.problem = read_seed(node, p.seed, "problem");
}

void parse_graph(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "graph", {"kind", "agents", "p", "seed", "max_retries"});
  std::string kind = to_string(cfg.graph.kind);
  read(node, "kind", kind, "graph");
  try {
    cfg.graph.kind = topology_kind_from_string(kind);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  read(node, "agents", cfg.graph.agents, "graph");
  read(node, "p", cfg.graph.edge_probability, "graph");
  read(node, "max_retries", cfg.graph.max_retries, "graph");
  cfg.explicit_seeds.graph = read_seed(node, cfg.graph.seed, "graph");
}

void parse_init(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "init", {"mode", "stddev", "seed"});
  std::string mode = cfg.init.mode == InitMode::random ? "random" : "optimum";
  read(node, "mode", mode, "init");
  if (mode == "random") {
    cfg.init.mode = InitMode::random;
  } else if (mode == "optimum") {
    cfg.init.mode = InitMode::optimum;
  } else {
    throw ConfigError("init.mode must be 'random' or 'optimum'");
  }
  read(node, "stddev", cfg.init.stddev, "init");
  cfg.explicit_seeds.init = read_seed(node, cfg.init.seed, "init");
}

AlgorithmConfig parse_algorithm(const YAML::Node& node, std::size_t index) {
  const std::string section = fmt::format("algorithms[{}]", index);
  check_keys(node, section, {"name", "label", "mode", "h", "beta", "oracle_mode", "step", "alpha", "beta_gain", "h_step"});
  AlgorithmConfig a;
  read(node, "name", a.name, section);
  if (a.name.empty()) throw ConfigError(section + " needs a name");
  if (a.name == "pi_consensus") a.name = "pi-consensus";
  if (a.name != "dist-agm") {
    try {
      a.name = to_string(baseline_kind_from_string(a.name));
    } catch (const InvalidArgument&) {
      throw ConfigError(fmt::format("{}: unknown algorithm '{}'", section, a.name));
    }
    // Tuned defaults differ per baseline.
    if (a.name == "pi-consensus") a.alpha = 0.01;
  }
  read(node, "label", a.label, section);
  if (a.label.empty()) a.label = a.name;
  read(node, "mode", a.mode, section);
  read(node, "h", a.h, section);
  read(node, "beta", a.beta, section);
  std::string oracle = to_string(a.oracle);
  read(node, "oracle_mode", oracle, section);
  try {
    a.oracle = oracle_mode_from_string(oracle);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  read(node, "step", a.step, section);
  read(node, "alpha", a.alpha, section);
  read(node, "beta_gain", a.beta_gain, section);
  read(node, "h_step", a.h_step, section);
  return a;
}

void parse_flow(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "flow", {"beta", "k_gain", "t0", "dt", "horizon", "record_every", "v0", "drift_tolerance",
                            "negativity_tolerance"});
  FlowConfig f;
  read(node, "beta", f.params.beta, "flow");
  read(node, "k_gain", f.params.k_gain, "flow");
  read(node, "t0", f.params.t0, "flow");
  read(node, "dt", f.params.dt, "flow");
  read(node, "horizon", f.params.horizon, "flow");
  read(node, "record_every", f.params.record_every, "flow");
  read(node, "v0", f.v0, "flow");
  read(node, "drift_tolerance", f.drift_tolerance, "flow");
  read(node, "negativity_tolerance", f.negativity_tolerance, "flow");
  cfg.flow = f;
}

void parse_rate(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "rate", {"from", "to", "tolerance", "log_uniform"});
  read(node, "from", cfg.rate.from, "rate");
  read(node, "to", cfg.rate.to, "rate");
  read(node, "tolerance", cfg.rate.tolerance, "rate");
  read(node, "log_uniform", cfg.rate.log_uniform, "rate");
}

}  // namespace

void ExperimentConfig::override_seed(std::uint64_t value) {
  seed = value;
  if (!explicit_seeds.problem) problem.seed = value;
  if (!explicit_seeds.graph) graph.seed = value + kGraphSeedOffset;
  if (!explicit_seeds.init) init.seed = value + kInitSeedOffset;
  problem.quadratic.seed = problem.seed;
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name must not be empty");
  if (iters < 0) throw ConfigError("iters must be non-negative");
  if (!(gap_threshold > 0.0 && gap_threshold < 1.0)) throw ConfigError("gap_threshold must lie in (0, 1)");
  if (graph.agents < 2) throw ConfigError("graph.agents must be at least 2");
  if (graph.kind == TopologyKind::erdos_renyi && !(graph.edge_probability > 0.0 && graph.edge_probability <= 1.0)) {
    throw ConfigError("graph.p must lie in (0, 1]");
  }
  if (problem.kind == ProblemKind::quadratic) {
    const auto& q = problem.quadratic;
    if (q.dim < 1) throw ConfigError("problem.dim must be positive");
    if (!(q.min_eig > 0.0 && q.max_eig >= q.min_eig)) throw ConfigError("need 0 < min_eig <= max_eig");
    if (!(q.jitter >= 0.0 && q.jitter < 1.0)) throw ConfigError("problem.jitter must lie in [0, 1)");
  } else {
    if (!(problem.l2 >= 0.0)) throw ConfigError("problem.l2 must be non-negative");
    if (problem.kind == ProblemKind::logistic_synthetic && (problem.samples < 2 || problem.features < 1)) {
      throw ConfigError("synthetic logistic needs samples >= 2 and features >= 1");
    }
    if (problem.cap < static_cast<std::size_t>(graph.agents)) throw ConfigError("problem.cap below agent count");
  }
  if (!(init.stddev >= 0.0)) throw ConfigError("init.stddev must be non-negative");
  if (!(solver.tolerance > 0.0) || solver.max_iterations < 1) throw ConfigError("invalid solver settings");

  std::set<std::string> labels;
  for (const auto& a : algorithms) {
    if (!labels.insert(a.label).second) throw ConfigError("duplicate algorithm label '" + a.label + "'");
    if (a.is_dist_agm()) {
      if (a.mode != "fixed" && a.mode != "adaptive") throw ConfigError("dist-agm mode must be fixed or adaptive");
      if (!(a.h > 0.0)) throw ConfigError(a.label + ": h must be positive");
      if (!(a.beta > 0.0 && a.beta < 2.0)) throw ConfigError(a.label + ": beta must lie in (0, 2)");
      if (!std::isnan(a.step) && !(a.step > 0.0)) throw ConfigError(a.label + ": step must be positive");
    } else {
      if (!(a.alpha > 0.0)) throw ConfigError(a.label + ": alpha must be positive");
      if (a.name == "pi-consensus" && !(a.beta_gain > 0.0 && a.h_step > 0.0)) {
        throw ConfigError(a.label + ": beta_gain and h_step must be positive");
      }
    }
  }
  if (flow) {
    try {
      flow->params.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("flow: ") + e.what());
    }
    if (flow->v0 != "zero" && flow->v0 != "kinetic-free") throw ConfigError("flow.v0 must be zero or kinetic-free");
  }
  if (!(rate.to > rate.from && rate.from > 0.0)) throw ConfigError("rate range must satisfy 0 < from < to");
  if (!(rate.tolerance >= 0.0)) throw ConfigError("rate.tolerance must be non-negative");
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a YAML mapping");
  check_keys(root, "<root>",
             {"name", "seed", "output_dir", "problem", "graph", "init", "solver", "iters", "gap_threshold",
              "algorithms", "flow", "rate"});
  ExperimentConfig cfg;
  read(root, "name", cfg.name, "<root>");
  read(root, "seed", cfg.seed, "<root>");
  read(root, "output_dir", cfg.output_dir, "<root>");
  read(root, "iters", cfg.iters, "<root>");
  read(root, "gap_threshold", cfg.gap_threshold, "<root>");
  if (root["problem"]) parse_problem(root["problem"], cfg);
  if (root["graph"]) parse_graph(root["graph"], cfg);
  if (root["init"]) parse_init(root["init"], cfg);
  if (const auto solver = root["solver"]) {
    check_keys(solver, "solver", {"tolerance", "max_iter", "method"});
    read(solver, "tolerance", cfg.solver.tolerance, "solver");
    read(solver, "max_iter", cfg.solver.max_iterations, "solver");
    if (solver["method"]) {
      std::string method;
      read(solver, "method", method, "solver");
      try {
        cfg.solver.method = solver_method_from_string(method);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (const auto algos = root["algorithms"]) {
    if (!algos.IsSequence()) throw ConfigError("algorithms must be a list");
    for (std::size_t i = 0; i < algos.size(); ++i) cfg.algorithms.push_back(parse_algorithm(algos[i], i));
  }
  if (root["flow"]) parse_flow(root["flow"], cfg);
  if (root["rate"]) parse_rate(root["rate"], cfg);
  cfg.problem.quadratic.agents = cfg.graph.agents;

  const auto explicit_seeds = cfg.explicit_seeds;
  const auto problem_seed = cfg.problem.seed;
  const auto graph_seed = cfg.graph.seed;
  const auto init_seed = cfg.init.seed;
  cfg.override_seed(cfg.seed);
  if (explicit_seeds.problem) cfg.problem.seed = problem_seed;
  if (explicit_seeds.graph) cfg.graph.seed = graph_seed;
  if (explicit_seeds.init) cfg.init.seed = init_seed;
  cfg.problem.quadratic.seed = cfg.problem.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string canonical_dump(const ExperimentConfig& c) {
  std::string out;
  auto put = [&out](const std::string& key, const auto& value) { out += fmt::format("{}={}\n", key, value); };
  auto num = [](double v) { return format_number(v); };
  put("name", c.name);
  put("seed", c.seed);
  put("iters", c.iters);
  put("gap_threshold", num(c.gap_threshold));
  put("problem.kind", to_string(c.problem.kind));
  put("problem.seed", c.problem.seed);
  if (c.problem.kind == ProblemKind::quadratic) {
    const auto& q = c.problem.quadratic;
    put("problem.dim", q.dim);
    put("problem.min_eig", num(q.min_eig));
    put("problem.max_eig", num(q.max_eig));
    put("problem.jitter", num(q.jitter));
    put("problem.offsets", q.offsets == OffsetMode::shared ? "shared" : "heterogeneous");
  } else {
    put("problem.l2", num(c.problem.l2));
    put("problem.samples", c.problem.samples);
    put("problem.features", c.problem.features);
    put("problem.separation", num(c.problem.separation));
    put("problem.cap", c.problem.cap);
    put("problem.digits", fmt::format("{}/{}", c.problem.positive_digit, c.problem.negative_digit));
  }
  put("graph.kind", to_string(c.graph.kind));
  put("graph.agents", c.graph.agents);
  put("graph.p", num(c.graph.edge_probability));
  put("graph.seed", c.graph.seed);
  put("init.mode", c.init.mode == InitMode::random ? "random" : "optimum");
  put("init.stddev", num(c.init.stddev));
  put("init.seed", c.init.seed);
  put("solver.tolerance", num(c.solver.tolerance));
  put("solver.max_iter", c.solver.max_iterations);
  put("solver.method", to_string(c.solver.method));
  for (const auto& a : c.algorithms) {
    const std::string p = "algorithm." + a.label + ".";
    put(p + "name", a.name);
    if (a.is_dist_agm()) {
      put(p + "mode", a.mode);
      put(p + "h", num(a.h));
      put(p + "beta", num(a.beta));
      put(p + "oracle", to_string(a.oracle));
      put(p + "step", num(a.step));
    } else {
      put(p + "alpha", num(a.alpha));
      if (a.name == "pi-consensus") {
        put(p + "beta_gain", num(a.beta_gain));
        put(p + "h_step", num(a.h_step));
      }
    }
  }
  if (c.flow) {
    const auto& f = *c.flow;
    put("flow.beta", num(f.params.beta));
    put("flow.k_gain", num(f.params.k_gain));
    put("flow.t0", num(f.params.t0));
    put("flow.dt", num(f.params.dt));
    put("flow.horizon", num(f.params.horizon));
    put("flow.record_every", f.params.record_every);
    put("flow.v0", f.v0);
  }
  put("rate.from", num(c.rate.from));
  put("rate.to", num(c.rate.to));
  put("rate.tolerance", num(c.rate.tolerance));
  put("rate.log_uniform", c.rate.log_uniform ? 1 : 0);
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_dump(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace dagm
