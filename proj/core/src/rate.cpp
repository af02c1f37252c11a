#include "dagm/rate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "dagm/error.hpp"

namespace dagm {

namespace {

SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw InvalidArgument("rate fit needs distinct index values");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points_used = x.size();
  return fit;
}

// Collects (log t, log gap) for positions [first, last), stopping at the first non-positive gap.
SlopeFit fit_positions(std::span<const double> index, std::span<const double> gap, std::size_t first,
                       std::size_t last, const SlopeFitOptions& options) {
  std::vector<double> lx, ly;
  bool truncated = false;
  for (std::size_t i = first; i < last; ++i) {
    if (!(gap[i] > 0.0) || !std::isfinite(gap[i])) {
      truncated = true;
      break;
    }
    if (!(index[i] > 0.0)) throw InvalidArgument("rate fit needs a positive index");
    lx.push_back(std::log(index[i]));
    ly.push_back(std::log(gap[i]));
  }
  if (options.log_uniform && lx.size() > options.log_points) {
    std::vector<double> sx, sy;
    const double lo = lx.front();
    const double hi = lx.back();
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < options.log_points; ++j) {
      const double target = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(options.log_points - 1);
      while (cursor + 1 < lx.size() && std::abs(lx[cursor + 1] - target) <= std::abs(lx[cursor] - target)) ++cursor;
      if (sx.empty() || lx[cursor] != sx.back()) {
        sx.push_back(lx[cursor]);
        sy.push_back(ly[cursor]);
      }
    }
    lx = std::move(sx);
    ly = std::move(sy);
  }
  if (lx.size() < options.min_points) {
    throw InvalidArgument(fmt::format("rate window too small: {} usable points, need {}", lx.size(),
                                      options.min_points));
  }
  SlopeFit fit = least_squares(lx, ly);
  fit.truncated = truncated;
  return fit;
}

void check_lengths(std::span<const double> index, std::span<const double> gap) {
  if (index.size() != gap.size()) throw DimensionError("index and gap series differ in length");
}

}  // namespace

SlopeFit rate_slope(std::span<const double> index, std::span<const double> gap, double window) {
  check_lengths(index, gap);
  if (!(window > 0.0 && window <= 1.0)) throw InvalidArgument("window fraction must lie in (0, 1]");
  const auto n = index.size();
  const auto count = static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
  return fit_positions(index, gap, n - std::min(count, n), n, SlopeFitOptions{});
}

std::vector<double> upper_envelope(std::span<const double> gap) {
  std::vector<double> env(gap.begin(), gap.end());
  for (std::size_t i = env.size(); i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
  return env;
}

SlopeFit rate_slope_range(std::span<const double> index, std::span<const double> gap,
                          const SlopeFitOptions& options) {
  check_lengths(index, gap);
  if (!(options.to > options.from)) throw InvalidArgument("rate range is empty");
  std::size_t first = 0;
  while (first < index.size() && index[first] < options.from) ++first;
  std::size_t last = first;
  while (last < index.size() && index[last] <= options.to) ++last;
  if (options.envelope) {
    // Envelope of the window only, so later samples outside it cannot leak in.
    const auto env = upper_envelope(gap.subspan(first, last - first));
    std::vector<double> shifted(index.begin() + static_cast<std::ptrdiff_t>(first),
                                index.begin() + static_cast<std::ptrdiff_t>(last));
    return fit_positions(shifted, env, 0, env.size(), options);
  }
  return fit_positions(index, gap, first, last, options);
}

}  // namespace dagm
