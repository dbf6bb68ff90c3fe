#include <cmath>
#include <sstream>

#include <doctest.h>

#include "rdskit/error.hpp"
#include "rdskit/noise.hpp"

using namespace rdskit;

namespace {

CovarianceSpec two_modes() { return CovarianceSpec::cylindrical({1.0, 0.5}); }

}  // namespace

TEST_CASE("shift composes additively and re-anchors the path at zero") {
  const WienerPath p = sample_path(two_modes(), 3.0, 3.0, 0.01, 42);
  const WienerPath ab = p.shifted_steps(70).shifted_steps(-25);
  const WienerPath direct = p.shifted_steps(45);
  CHECK(ab.anchor_steps() == 45);
  CHECK(ab.max_increment_difference(direct) == 0.0);
  CHECK(p.shifted(0.45).max_increment_difference(direct) == 0.0);

  // theta_s omega (t) = omega(t + s) - omega(s)
  for (int mode = 0; mode < 2; ++mode) {
    CHECK(direct.value(mode, 0.0) == 0.0);
    for (double t : {-1.0, -0.3, 0.2, 1.5}) {
      const double expected = p.value(mode, t + 0.45) - p.value(mode, 0.45);
      CHECK(direct.value(mode, t) == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("values reconstructed from either end agree") {
  const WienerPath p = sample_path(two_modes(), 2.0, 2.0, 0.01, 3).shifted_steps(17);
  for (double t : {-1.5, -0.01, 0.0, 0.37, 1.2}) {
    CHECK(p.value(1, t) == doctest::Approx(p.value_from_left_end(1, t)).epsilon(1e-12));
  }
}

TEST_CASE("enlarging the sampled window keeps existing increments") {
  const WienerPath small = sample_path(two_modes(), 1.0, 2.0, 0.01, 9);
  const WienerPath large = sample_path(two_modes(), 4.0, 7.0, 0.01, 9);
  CHECK(small.first_cell() == -100);
  CHECK(large.first_cell() == -400);
  CHECK(small.max_increment_difference(large) == 0.0);
  const WienerPath other = sample_path(two_modes(), 1.0, 2.0, 0.01, 10);
  CHECK(small.max_increment_difference(other) > 0.0);
}

TEST_CASE("increments are N(0, h) and independent across modes") {
  const double h = 0.02;
  const WienerPath p = sample_path(two_modes(), 500.0, 500.0, h, 5);
  double s0 = 0.0, s00 = 0.0, s01 = 0.0;
  long n = 0;
  for (std::int64_t c = p.first_cell(); c < p.end_cell(); ++c, ++n) {
    const auto cell = p.cell(c);
    s0 += cell[0];
    s00 += cell[0] * cell[0];
    s01 += cell[0] * cell[1];
  }
  // 50000 samples: standard errors are h*sqrt(2/n) for the variance and h/sqrt(n) for the rest.
  const double se = h / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(s0 / n) < 5.0 * std::sqrt(h / n));
  CHECK(std::abs(s00 / n - h) < 5.0 * std::sqrt(2.0) * se);
  CHECK(std::abs(s01 / n) < 5.0 * se);
}

TEST_CASE("save and load reproduce the path and its anchor") {
  const WienerPath p = sample_path(two_modes(), 1.0, 1.0, 0.05, 77).shifted_steps(4);
  std::stringstream buf;
  p.save(buf);
  const WienerPath q = WienerPath::load(buf);
  CHECK(q.anchor_steps() == 4);
  CHECK(q.step() == p.step());
  CHECK(q.seed() == p.seed());
  CHECK(q.first_cell() == p.first_cell());
  CHECK(q.max_increment_difference(p) == 0.0);
}

TEST_CASE("coarsening sums groups of cells") {
  const WienerPath p = sample_path(two_modes(), 1.0, 1.0, 0.01, 2);
  const WienerPath c = p.coarsened(5);
  CHECK(c.step() == doctest::Approx(0.05));
  CHECK(c.increment(1, 3) == doctest::Approx(p.increment(1, 15) + p.increment(1, 16) + p.increment(1, 17) +
                                             p.increment(1, 18) + p.increment(1, 19)));
  CHECK(c.value(0, -0.5) == doctest::Approx(p.value(0, -0.5)).epsilon(1e-12));
}

TEST_CASE("misaligned shifts and cells outside the window are rejected") {
  const WienerPath p = sample_path(two_modes(), 1.0, 1.0, 0.01, 1);
  CHECK_THROWS_WITH_AS(p.shifted(0.005), doctest::Contains("grid-misaligned"), Error);
  CHECK_THROWS_AS(p.cell(100), Error);
  CHECK_THROWS_AS(p.cell(-101), Error);
  CHECK_NOTHROW(p.cell(-100));
}

TEST_CASE("weighted integral equals the explicit left-point sum") {
  const double h = 0.01;
  const WienerPath p = sample_path(two_modes(), 30.0, 1.0, h, 8);
  const WeightedIntegral w = weighted_integral(p, 0, {2.0, -INFINITY, 0.0}, 1e-8);
  double oracle = 0.0;
  for (std::int64_t c = w.first_cell; c < 0; ++c) oracle += std::exp(2.0 * c * h) * p.increment(0, c);
  CHECK(w.end_cell == 0);
  CHECK(w.value == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(w.truncation_bound <= 1e-8);
  CHECK(std::exp(2.0 * (w.first_cell - 1) * h) < 1e-8);
}

TEST_CASE("power-law covariance") {
  const CovarianceSpec c = CovarianceSpec::power_law(4, 2.0, 2.0);
  REQUIRE(c.mode_count() == 4);
  CHECK(c.sigma[2] == doctest::Approx(2.0 / 9.0));
  CHECK(c.tail_bound == doctest::Approx(2.0 * std::pow(4.0, -1.0)));
  const Eigen::MatrixXd b0 = c.coupling(4);
  CHECK(b0(3, 3) == doctest::Approx(2.0 / 16.0));
  CHECK(b0(0, 1) == 0.0);
  CHECK(c.hilbert_schmidt_norm() == doctest::Approx(b0.norm()));
}
