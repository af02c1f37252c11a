#pragma once

#include <Eigen/Dense>

namespace dagm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Read-only view of the d-dimensional block of agent `i` inside a stacked md-vector.
inline auto block_of(const Vector& stacked, int i, int d) { return stacked.segment(static_cast<Eigen::Index>(i) * d, d); }
inline auto block_of(Vector& stacked, int i, int d) { return stacked.segment(static_cast<Eigen::Index>(i) * d, d); }

/// Returns true when every entry is finite.
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace dagm
