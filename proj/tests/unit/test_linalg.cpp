#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "rdskit/error.hpp"
#include "rdskit/linalg.hpp"

using namespace rdskit;
using Eigen::MatrixXd;

TEST_CASE("principal angles between two planes in R^3") {
  // span(e1, e2) against span(e1, cos t e2 + sin t e3): angles 0 and t.
  const double t = 0.3;
  MatrixXd a = MatrixXd::Zero(3, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  MatrixXd b = MatrixXd::Zero(3, 2);
  b(0, 0) = 1.0;
  b(1, 1) = std::cos(t);
  b(2, 1) = std::sin(t);
  const std::vector<double> angles = principal_angles(a, b);
  REQUIRE(angles.size() == 2);
  CHECK(angles[0] == doctest::Approx(0.0));
  CHECK(angles[1] == doctest::Approx(t));
  CHECK(subspace_distance(a, b) == doctest::Approx(t));
  CHECK(min_principal_angle(a, b) == doctest::Approx(0.0));
  CHECK(min_principal_angle(a, MatrixXd(3, 0)) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("tiny angles keep their precision") {
  const double t = 1e-10;
  MatrixXd a = MatrixXd::Zero(2, 1);
  a(0, 0) = 1.0;
  MatrixXd b(2, 1);
  b << std::cos(t), std::sin(t);
  CHECK(subspace_distance(a, b) == doctest::Approx(t).epsilon(1e-6));
}

TEST_CASE("orthonormal basis and complement") {
  MatrixXd m(4, 3);
  m << 1, 2, 3, 0, 1, 1, 1, 3, 4, 2, 0, 2;  // third column = first + second
  const MatrixXd q = orthonormal_basis(m);
  REQUIRE(q.cols() == 2);
  CHECK((q.transpose() * q - MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK(relative_distance_to_span(q, m.col(2)) < 1e-12);
  const MatrixXd c = orthogonal_complement(q);
  REQUIRE(c.cols() == 2);
  CHECK((q.transpose() * c).norm() < 1e-12);
  CHECK(relative_distance_to_span(q, c.col(0)) == doctest::Approx(1.0));
}

TEST_CASE("least-squares line") {
  const std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> y;
  for (double v : x) y.push_back(-2.5 * v + 1.0);
  const LineFit exact = fit_line(x, y);
  CHECK(exact.slope == doctest::Approx(-2.5));
  CHECK(exact.intercept == doctest::Approx(1.0));
  CHECK(exact.r_squared == doctest::Approx(1.0));
  CHECK(exact.points == 5);

  // Perturbed data against the closed-form OLS slope.
  std::vector<double> noisy = y;
  const double bumps[] = {0.1, -0.2, 0.05, 0.3, -0.1};
  for (int i = 0; i < 5; ++i) noisy[static_cast<std::size_t>(i)] += bumps[i];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 5; ++i) {
    sx += x[static_cast<std::size_t>(i)];
    sy += noisy[static_cast<std::size_t>(i)];
    sxx += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    sxy += x[static_cast<std::size_t>(i)] * noisy[static_cast<std::size_t>(i)];
  }
  const double slope = (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
  const LineFit fit = fit_line(x, noisy);
  CHECK(fit.slope == doctest::Approx(slope));
  CHECK(fit.slope_stderr > 0.0);
  CHECK(fit.r_squared < 1.0);

  const std::vector<double> two = {0.0, 1.0};
  CHECK_THROWS_AS(fit_line(two, two), Error);
}
