#include "dagm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "dagm/data_io.hpp"

namespace dagm {

namespace {

double largest_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigenvalue computation failed");
  return solver.eigenvalues().maxCoeff();
}

// log(1 + exp(u)) without overflow.
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

Matrix random_orthogonal(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix column signs so the factor is unique for a given draw.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

}  // namespace

QuadraticLocal::QuadraticLocal(Matrix q, Vector offset) : q_(std::move(q)), offset_(std::move(offset)) {
  if (q_.rows() != q_.cols() || q_.rows() != offset_.size() || offset_.size() == 0) {
    throw DimensionError("quadratic curvature and offset sizes disagree");
  }
  if (!q_.isApprox(q_.transpose(), 1e-12)) throw InvalidArgument("quadratic curvature must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(q_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("quadratic curvature must be positive definite");
  smoothness_ = solver.eigenvalues().maxCoeff();
}

double QuadraticLocal::value(const Eigen::Ref<const Vector>& x) const {
  const Vector r = x - offset_;
  return 0.5 * r.dot(q_ * r);
}

void QuadraticLocal::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  out.noalias() = q_ * (x - offset_);
}

bool QuadraticLocal::hessian(const Eigen::Ref<const Vector>& /*x*/, Matrix& out) const {
  out = q_;
  return true;
}

LogisticLocal::LogisticLocal(Matrix features, Vector labels, double ridge)
    : features_(std::move(features)), labels_(std::move(labels)), ridge_(ridge) {
  if (features_.rows() == 0) throw InvalidArgument("logistic shard is empty");
  if (features_.rows() != labels_.size()) throw DimensionError("feature rows and labels disagree");
  if (ridge_ < 0.0) throw InvalidArgument("ridge coefficient must be nonnegative");
  for (Eigen::Index n = 0; n < labels_.size(); ++n) {
    if (labels_(n) != 0.0 && labels_(n) != 1.0) {
      throw InvalidArgument(fmt::format("label {} at row {} is not in {{0,1}}", labels_(n), n));
    }
  }
  smoothness_ = 0.25 * largest_eigenvalue(features_.transpose() * features_) + ridge_;
}

double LogisticLocal::value(const Eigen::Ref<const Vector>& w) const {
  const Vector u = features_ * w;
  double total = 0.0;
  for (Eigen::Index n = 0; n < u.size(); ++n) total += softplus(u(n)) - labels_(n) * u(n);
  return total + 0.5 * ridge_ * w.squaredNorm();
}

void LogisticLocal::gradient(const Eigen::Ref<const Vector>& w, Eigen::Ref<Vector> out) const {
  Vector residual = features_ * w;
  for (Eigen::Index n = 0; n < residual.size(); ++n) residual(n) = sigmoid(residual(n)) - labels_(n);
  out.noalias() = features_.transpose() * residual;
  out += ridge_ * w;
}

bool LogisticLocal::hessian(const Eigen::Ref<const Vector>& w, Matrix& out) const {
  Vector weight = features_ * w;
  for (Eigen::Index n = 0; n < weight.size(); ++n) {
    const double p = sigmoid(weight(n));
    weight(n) = p * (1.0 - p);
  }
  out.noalias() = features_.transpose() * weight.asDiagonal() * features_;
  out.diagonal().array() += ridge_;
  return true;
}

SeparableObjective::SeparableObjective(std::vector<std::shared_ptr<const LocalObjective>> locals, std::string name,
                                       std::optional<Vector> closed_form_minimizer)
    : locals_(std::move(locals)), name_(std::move(name)), closed_form_(std::move(closed_form_minimizer)) {
  if (locals_.empty()) throw InvalidArgument("objective needs at least one agent");
  dim_ = locals_.front()->dim();
  for (const auto& f : locals_) {
    if (!f) throw InvalidArgument("null local objective");
    if (f->dim() != dim_) throw DimensionError("local objectives have different dimensions");
    smoothness_ = std::max(smoothness_, f->smoothness());
    aggregate_smoothness_ += f->smoothness();
  }
  if (closed_form_ && closed_form_->size() != dim_) throw DimensionError("closed-form minimizer has wrong size");
}

void SeparableObjective::check_stacked(const Vector& stacked) const {
  if (stacked.size() != stacked_size()) {
    throw DimensionError(fmt::format("stacked state has length {}, expected {} (m={}, d={})", stacked.size(),
                                     stacked_size(), agents(), dim_));
  }
}

double SeparableObjective::value(const Vector& stacked) const {
  check_stacked(stacked);
  double total = 0.0;
  for (int i = 0; i < agents(); ++i) total += locals_[static_cast<std::size_t>(i)]->value(block_of(stacked, i, dim_));
  return total;
}

void SeparableObjective::gradient(const Vector& stacked, Vector& out) const {
  check_stacked(stacked);
  out.resize(stacked_size());
  for (int i = 0; i < agents(); ++i) {
    locals_[static_cast<std::size_t>(i)]->gradient(block_of(stacked, i, dim_), block_of(out, i, dim_));
  }
}

Vector SeparableObjective::gradient(const Vector& stacked) const {
  Vector out;
  gradient(stacked, out);
  return out;
}

double SeparableObjective::aggregate_value(const Vector& x) const {
  if (x.size() != dim_) throw DimensionError("aggregate point has wrong dimension");
  double total = 0.0;
  for (const auto& f : locals_) total += f->value(x);
  return total;
}

Vector SeparableObjective::aggregate_gradient(const Vector& x) const {
  if (x.size() != dim_) throw DimensionError("aggregate point has wrong dimension");
  Vector total = Vector::Zero(dim_);
  Vector g(dim_);
  for (const auto& f : locals_) {
    f->gradient(x, g);
    total += g;
  }
  return total;
}

SeparableObjective make_quadratic(std::vector<Matrix> curvatures, std::vector<Vector> offsets) {
  if (curvatures.size() != offsets.size() || curvatures.empty()) {
    throw InvalidArgument("need one curvature and one offset per agent");
  }
  std::vector<std::shared_ptr<const LocalObjective>> locals;
  Matrix q_sum = Matrix::Zero(curvatures.front().rows(), curvatures.front().cols());
  Vector qb_sum = Vector::Zero(offsets.front().size());
  for (std::size_t i = 0; i < curvatures.size(); ++i) {
    auto local = std::make_shared<QuadraticLocal>(std::move(curvatures[i]), std::move(offsets[i]));
    if (local->dim() != q_sum.rows()) throw DimensionError("agents have different dimensions");
    q_sum += local->curvature();
    qb_sum += local->curvature() * local->offset();
    locals.push_back(std::move(local));
  }
  // A common offset is the exact minimizer; the linear solve would only round it.
  const Vector& b0 = dynamic_cast<const QuadraticLocal&>(*locals.front()).offset();
  const bool common = std::all_of(locals.begin(), locals.end(), [&](const auto& f) {
    return dynamic_cast<const QuadraticLocal&>(*f).offset() == b0;
  });
  Vector x_star = common ? b0 : Vector(q_sum.ldlt().solve(qb_sum));
  return SeparableObjective(std::move(locals), "quadratic", std::move(x_star));
}

SeparableObjective make_quadratic(const QuadraticSpec& spec) {
  if (spec.agents < 1 || spec.dim < 1) throw InvalidArgument("quadratic needs agents >= 1 and dim >= 1");
  if (!(spec.min_eig > 0.0) || !(spec.max_eig > 0.0)) throw InvalidArgument("invalid spectrum: eigenvalues must be positive");
  if (spec.min_eig > spec.max_eig) throw InvalidArgument("invalid spectrum: min_eig exceeds max_eig");
  if (!(spec.jitter >= 0.0 && spec.jitter < 1.0)) throw InvalidArgument("jitter must lie in [0, 1)");

  std::mt19937_64 rng(spec.seed);
  const Matrix basis = random_orthogonal(spec.dim, rng);
  Vector base(spec.dim);
  for (int j = 0; j < spec.dim; ++j) {
    const double frac = spec.dim == 1 ? 0.0 : static_cast<double>(j) / (spec.dim - 1);
    base(j) = std::exp(std::log(spec.min_eig) + frac * (std::log(spec.max_eig) - std::log(spec.min_eig)));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1.0 - spec.jitter, 1.0 + spec.jitter);

  Vector shared_offset(spec.dim);
  for (int j = 0; j < spec.dim; ++j) shared_offset(j) = normal(rng);

  std::vector<Matrix> curvatures;
  std::vector<Vector> offsets;
  for (int i = 0; i < spec.agents; ++i) {
    Vector eig = base;
    for (int j = 0; j < spec.dim; ++j) eig(j) *= scale(rng);
    curvatures.push_back(basis * eig.asDiagonal() * basis.transpose());
    // Symmetrize away rounding from the triple product.
    curvatures.back() = 0.5 * (curvatures.back() + curvatures.back().transpose()).eval();
    if (spec.offsets == OffsetMode::shared) {
      offsets.push_back(shared_offset);
    } else {
      Vector b(spec.dim);
      for (int j = 0; j < spec.dim; ++j) b(j) = normal(rng);
      offsets.push_back(std::move(b));
    }
  }
  return make_quadratic(std::move(curvatures), std::move(offsets));
}

SeparableObjective make_logistic(const ShardedDataset& shards, double ridge) {
  if (shards.shards.empty()) throw InvalidArgument("logistic objective needs at least one shard");
  if (ridge < 0.0) throw InvalidArgument("ridge coefficient must be nonnegative");
  const double per_agent_ridge = ridge / static_cast<double>(shards.count());
  std::vector<std::shared_ptr<const LocalObjective>> locals;
  for (std::size_t i = 0; i < shards.shards.size(); ++i) {
    const auto& s = shards.shards[i];
    if (s.rows() == 0) throw InvalidArgument(fmt::format("shard {} is empty", i));
    locals.push_back(std::make_shared<LogisticLocal>(s.features, s.labels, per_agent_ridge));
  }
  return SeparableObjective(std::move(locals), "logistic");
}

ConsensusOptimum make_consensus_optimum(const SeparableObjective& objective, const Vector& x_star, long iterations) {
  ConsensusOptimum opt;
  opt.x_star = x_star;
  opt.f_star = objective.aggregate_value(x_star);
  opt.stacked = x_star.replicate(objective.agents(), 1);
  opt.grad_at_opt = objective.gradient(opt.stacked);
  opt.grad_norm = objective.aggregate_gradient(x_star).norm();
  opt.iterations = iterations;
  return opt;
}

std::optional<Matrix> SeparableObjective::aggregate_hessian(const Vector& x) const {
  if (x.size() != dim_) throw DimensionError("aggregate point has wrong dimension");
  Matrix total = Matrix::Zero(dim_, dim_);
  Matrix h;
  for (const auto& f : locals_) {
    if (!f->hessian(x, h)) return std::nullopt;
    total += h;
  }
  return total;
}

std::string to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::accelerated: return "accelerated";
    case SolverMethod::newton: return "newton";
    case SolverMethod::automatic: return "automatic";
  }
  return "?";
}

SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "accelerated") return SolverMethod::accelerated;
  if (name == "newton") return SolverMethod::newton;
  if (name == "automatic") return SolverMethod::automatic;
  throw InvalidArgument("unknown solver method '" + name + "'");
}

namespace {

// Damped Newton with Armijo backtracking. Returns the final iterate and the
// number of iterations; `converged` reports whether the tolerance was met.
Vector newton_solve(const SeparableObjective& objective, const SolverOptions& options, long& iterations,
                    bool& converged) {
  constexpr long kMaxNewton = 200;
  Vector x = Vector::Zero(objective.dim());
  converged = false;
  for (iterations = 0; iterations < kMaxNewton; ++iterations) {
    const Vector g = objective.aggregate_gradient(x);
    if (g.norm() <= options.tolerance) {
      converged = true;
      return x;
    }
    const auto h = objective.aggregate_hessian(x);
    if (!h) return x;
    const Eigen::LDLT<Matrix> ldlt(*h);
    if (ldlt.info() != Eigen::Success) return x;
    const Vector dx = -ldlt.solve(g);
    const double slope = g.dot(dx);
    if (!dx.allFinite() || !(slope < 0.0)) return x;
    const double f0 = objective.aggregate_value(x);
    double t = 1.0;
    while (t > 1e-12 && objective.aggregate_value(x + t * dx) > f0 + 1e-4 * t * slope) t *= 0.5;
    if (t <= 1e-12) return x;
    x += t * dx;
  }
  return x;
}

}  // namespace

ConsensusOptimum solve_consensus_optimum(const SeparableObjective& objective, const SolverOptions& options) {
  if (!(options.tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  const double step = 1.0 / objective.aggregate_smoothness();
  const int d = objective.dim();

  Vector x = Vector::Zero(d);
  long newton_iterations = 0;
  if (options.method != SolverMethod::accelerated &&
      (options.method == SolverMethod::newton || objective.aggregate_hessian(x).has_value())) {
    bool converged = false;
    x = newton_solve(objective, options, newton_iterations, converged);
    if (converged) return make_consensus_optimum(objective, x, newton_iterations);
  }

  Vector y = x;
  Vector x_next(d);
  double momentum = 1.0;
  Vector best = x;
  double best_norm = objective.aggregate_gradient(x).norm();
  if (best_norm <= options.tolerance) return make_consensus_optimum(objective, x, 0);

  for (long it = 1; it <= options.max_iterations; ++it) {
    const Vector g = objective.aggregate_gradient(y);
    x_next = y - step * g;
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    // Gradient-based adaptive restart.
    if (g.dot(x_next - x) > 0.0) {
      momentum = 1.0;
      y = x_next;
    } else {
      y = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x);
      momentum = momentum_next;
    }
    x = x_next;
    const double norm = objective.aggregate_gradient(x).norm();
    if (norm < best_norm) {
      best_norm = norm;
      best = x;
    }
    if (norm <= options.tolerance) return make_consensus_optimum(objective, x, it);
    if (!x.allFinite()) break;
  }
  throw NonConvergenceError(fmt::format("reference solver stopped at {} iterations with ||grad f|| = {:.3e} > {:.3e}",
                                        options.max_iterations, best_norm, options.tolerance),
                            make_consensus_optimum(objective, best, options.max_iterations));
}

}  // namespace dagm
