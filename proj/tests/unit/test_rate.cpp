#include <doctest.h>

#include <cmath>
#include <vector>

#include "dagm/error.hpp"
#include "dagm/rate.hpp"

TEST_CASE("exact power law") {
  std::vector<double> k, gap;
  for (int i = 1; i <= 1000; ++i) {
    k.push_back(i);
    gap.push_back(3.0 / std::pow(i, 2.0));
  }
  const auto fit = dagm::rate_slope(k, gap, 0.5);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.points_used == 500);
}

TEST_CASE("fit range, log-uniform sampling and envelope") {
  std::vector<double> k, gap;
  for (int i = 1; i <= 10000; ++i) {
    k.push_back(i);
    // Oscillating decay: the envelope recovers the power.
    gap.push_back((1.0 + 0.9 * std::cos(0.3 * i)) / std::pow(i, 1.5) + 1e-300);
  }
  dagm::SlopeFitOptions opt;
  opt.from = 100;
  opt.to = 10000;
  opt.envelope = true;
  const auto env = dagm::rate_slope_range(k, gap, opt);
  CHECK(env.slope == doctest::Approx(-1.5).epsilon(0.02));
  CHECK(env.r_squared > 0.99);
  opt.envelope = false;
  opt.log_uniform = true;
  const auto lu = dagm::rate_slope_range(k, gap, opt);
  CHECK(lu.points_used <= 200);
  const auto up = dagm::upper_envelope(std::vector<double>{1, 3, 2, 0.5});
  CHECK(up == std::vector<double>{3, 3, 2, 0.5});
}

TEST_CASE("truncation and window errors") {
  std::vector<double> k, gap;
  for (int i = 1; i <= 100; ++i) {
    k.push_back(i);
    gap.push_back(i <= 60 ? 1.0 / i : 0.0);
  }
  const auto fit = dagm::rate_slope(k, gap, 0.8);
  CHECK(fit.truncated);
  CHECK(fit.slope == doctest::Approx(-1.0));
  CHECK_THROWS_AS(dagm::rate_slope(k, gap, 0.3), dagm::InvalidArgument);
  CHECK_THROWS_AS(dagm::rate_slope(k, gap, 1.5), dagm::InvalidArgument);
  CHECK_THROWS_AS(dagm::rate_slope(k, std::vector<double>(5, 1.0), 0.5), dagm::DimensionError);
}
