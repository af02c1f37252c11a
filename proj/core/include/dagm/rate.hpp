#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dagm {

/// Least-squares fit of log(gap) against log(index).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  /// The window was cut short at the first non-positive gap.
  bool truncated = false;
};

struct SlopeFitOptions {
  /// Lower and upper bound on the index (t or k); inclusive.
  double from = 0.0;
  double to = 0.0;
  std::size_t min_points = 20;
  /// Fit on points nearest to `log_points` log-uniform abscissae instead of
  /// every point, so that each decade carries the same weight.
  bool log_uniform = false;
  std::size_t log_points = 200;
  /// Fit the upper envelope max_{j >= i} gap_j instead of the raw gap. For an
  /// oscillating gap this measures the decay of the bound rather than of the
  /// instantaneous value.
  bool envelope = false;
};

/// env_i = max_{j >= i} gap_j.
std::vector<double> upper_envelope(std::span<const double> gap);

/// Slope over the last `window` fraction of the series (0 < window <= 1).
/// Non-positive gaps end the window early and set `truncated`.
/// Throws InvalidArgument if fewer than 20 usable points remain.
SlopeFit rate_slope(std::span<const double> index, std::span<const double> gap, double window);

/// Slope over index values in [options.from, options.to].
SlopeFit rate_slope_range(std::span<const double> index, std::span<const double> gap,
                          const SlopeFitOptions& options);

}  // namespace dagm
