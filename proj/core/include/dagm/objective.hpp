#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dagm/error.hpp"
#include "dagm/types.hpp"

namespace dagm {

/// A differentiable convex function f_i : R^d -> R held by one agent.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;
  virtual int dim() const = 0;
  virtual double value(const Eigen::Ref<const Vector>& x) const = 0;
  virtual void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const = 0;
  /// Upper bound on the Lipschitz constant of the gradient.
  virtual double smoothness() const = 0;
  /// Writes the Hessian and returns true, or returns false if unavailable.
  virtual bool hessian(const Eigen::Ref<const Vector>& /*x*/, Matrix& /*out*/) const { return false; }
};

/// f(x) = 1/2 (x - b)^T Q (x - b) with Q symmetric positive definite.
class QuadraticLocal final : public LocalObjective {
 public:
  QuadraticLocal(Matrix q, Vector offset);
  int dim() const override { return static_cast<int>(offset_.size()); }
  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
  double smoothness() const override { return smoothness_; }
  bool hessian(const Eigen::Ref<const Vector>& x, Matrix& out) const override;
  const Matrix& curvature() const noexcept { return q_; }
  const Vector& offset() const noexcept { return offset_; }

 private:
  Matrix q_;
  Vector offset_;
  double smoothness_;
};

/// Cross-entropy loss of a logistic model on one shard, plus a ridge term:
/// sum_n [log(1 + exp(z_n.w)) - y_n z_n.w] + (ridge/2) ||w||^2.
class LogisticLocal final : public LocalObjective {
 public:
  LogisticLocal(Matrix features, Vector labels, double ridge);
  int dim() const override { return static_cast<int>(features_.cols()); }
  double value(const Eigen::Ref<const Vector>& w) const override;
  void gradient(const Eigen::Ref<const Vector>& w, Eigen::Ref<Vector> out) const override;
  double smoothness() const override { return smoothness_; }
  bool hessian(const Eigen::Ref<const Vector>& w, Matrix& out) const override;

 private:
  Matrix features_;
  Vector labels_;
  double ridge_;
  double smoothness_;
};

/// F(X) = sum_i f_i(x_i) over a stacked state X = (x_1, ..., x_m) in R^{md}.
class SeparableObjective {
 public:
  SeparableObjective(std::vector<std::shared_ptr<const LocalObjective>> locals, std::string name = {},
                     std::optional<Vector> closed_form_minimizer = std::nullopt);

  int agents() const noexcept { return static_cast<int>(locals_.size()); }
  int dim() const noexcept { return dim_; }
  Eigen::Index stacked_size() const noexcept { return static_cast<Eigen::Index>(agents()) * dim_; }
  const std::string& name() const noexcept { return name_; }
  const LocalObjective& local(int i) const { return *locals_.at(static_cast<std::size_t>(i)); }

  /// L_f: Lipschitz bound of grad F, i.e. the largest local bound.
  double smoothness() const noexcept { return smoothness_; }

  /// F(X).
  double value(const Vector& stacked) const;
  /// grad F(X); block i is grad f_i(x_i).
  Vector gradient(const Vector& stacked) const;
  void gradient(const Vector& stacked, Vector& out) const;

  /// Centralized f(x) = sum_i f_i(x) and its gradient, for x in R^d.
  double aggregate_value(const Vector& x) const;
  Vector aggregate_gradient(const Vector& x) const;
  /// Hessian of f at x, if every local objective provides one.
  std::optional<Matrix> aggregate_hessian(const Vector& x) const;
  /// Lipschitz bound of grad f (sum of the local bounds).
  double aggregate_smoothness() const noexcept { return aggregate_smoothness_; }

  /// Exact minimizer of f when the problem has one in closed form.
  const std::optional<Vector>& closed_form_minimizer() const noexcept { return closed_form_; }

 private:
  void check_stacked(const Vector& stacked) const;

  std::vector<std::shared_ptr<const LocalObjective>> locals_;
  std::string name_;
  int dim_ = 0;
  double smoothness_ = 0.0;
  double aggregate_smoothness_ = 0.0;
  std::optional<Vector> closed_form_;
};

/// How agent offsets b_i are drawn for random quadratic instances.
enum class OffsetMode {
  shared,        // every agent uses the same b, so all f_i share the minimizer
  heterogeneous  // independent b_i per agent
};

struct QuadraticSpec {
  int agents = 5;
  int dim = 2;
  /// Base eigenvalues are log-spaced in [min_eig, max_eig] in a common random basis.
  double min_eig = 1e-4;
  double max_eig = 1.0;
  /// Per-agent eigenvalues are the base ones scaled by factors drawn
  /// uniformly from [1 - jitter, 1 + jitter], jitter in [0, 1).
  double jitter = 0.5;
  OffsetMode offsets = OffsetMode::shared;
  std::uint64_t seed = 0;
};

SeparableObjective make_quadratic(const QuadraticSpec& spec);
/// Quadratic with explicitly given per-agent curvatures Q_i and offsets b_i.
SeparableObjective make_quadratic(std::vector<Matrix> curvatures, std::vector<Vector> offsets);

struct LabeledDataset;
struct ShardedDataset;

/// One logistic local per shard; `ridge` is split evenly so that the
/// aggregate carries (ridge/2)||w||^2. Shards must already contain the bias column.
SeparableObjective make_logistic(const ShardedDataset& shards, double ridge);

/// Stacked consensus optimum of sum_i f_i.
struct ConsensusOptimum {
  Vector x_star;          // minimizer in R^d
  double f_star = 0.0;    // F* = f(x*)
  Vector stacked;         // X* = (x*, ..., x*)
  Vector grad_at_opt;     // grad F(X*), generally non-zero blockwise
  double grad_norm = 0.0; // ||sum_i grad f_i(x*)||
  long iterations = 0;
};

/// Thrown when the reference solver stops at its iteration cap; carries the best iterate.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, ConsensusOptimum best) : Error(what), best_(std::move(best)) {}
  const ConsensusOptimum& best() const noexcept { return best_; }

 private:
  ConsensusOptimum best_;
};

enum class SolverMethod {
  accelerated,  // gradient method with momentum and adaptive restart
  newton,       // damped Newton with backtracking; needs Hessians
  automatic     // Newton when every local provides a Hessian, else accelerated
};

std::string to_string(SolverMethod method);
SolverMethod solver_method_from_string(const std::string& name);

struct SolverOptions {
  double tolerance = 1e-10;
  long max_iterations = 2'000'000;
  SolverMethod method = SolverMethod::automatic;
};

/// Centralized minimization of f = sum_i f_i until ||grad f|| <= tolerance.
/// The accelerated method uses step 1/aggregate_smoothness. A Newton run
/// that stalls hands its iterate to the accelerated method.
ConsensusOptimum solve_consensus_optimum(const SeparableObjective& objective, const SolverOptions& options = {});

/// Builds the optimum record for a known minimizer (evaluates F*, X*, grad F(X*)).
ConsensusOptimum make_consensus_optimum(const SeparableObjective& objective, const Vector& x_star, long iterations = 0);

}  // namespace dagm
