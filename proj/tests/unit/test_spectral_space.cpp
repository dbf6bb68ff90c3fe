#include <cmath>
#include <numbers>

#include <doctest.h>

#include "rdskit/error.hpp"
#include "rdskit/spectral_space.hpp"

using namespace rdskit;

TEST_CASE("Dirichlet Laplacian on the interval") {
  const OperatorSpec op = OperatorSpec::dirichlet_interval(5, 0.5);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  REQUIRE(op.dim() == 5);
  for (int n = 1; n <= 5; ++n) CHECK(op.eigenvalue(n - 1) == doctest::Approx(0.5 * n * n * pi2));
  CHECK(op.minus_dim() == 0);
  CHECK(op.strictly_increasing());
  CHECK(op.inverse_trace() == doctest::Approx((1.0 + 1.0 / 4 + 1.0 / 9 + 1.0 / 16 + 1.0 / 25) / (0.5 * pi2)));
}

TEST_CASE("Dirichlet Laplacian on the square keeps multiplicities") {
  const OperatorSpec op = OperatorSpec::dirichlet_box(6, 2, 1.0);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  // |k|^2 = 2, 5, 5, 8, 10, 10
  const double expected[] = {2, 5, 5, 8, 10, 10};
  REQUIRE(op.dim() == 6);
  for (int i = 0; i < 6; ++i) CHECK(op.eigenvalue(i) == doctest::Approx(expected[i] * pi2));
  CHECK_FALSE(op.strictly_increasing());
}

TEST_CASE("eigenvalue validation") {
  CHECK_THROWS_WITH_AS(OperatorSpec::from_eigenvalues({-1.0, 0.0, 2.0}), doctest::Contains("zero-eigenvalue"), Error);
  CHECK_NOTHROW(OperatorSpec::from_eigenvalues({-1.0, 0.0, 2.0}, false));
  CHECK_THROWS_AS(OperatorSpec::from_eigenvalues({2.0, 1.0}), Error);
  CHECK_THROWS_AS(OperatorSpec::from_eigenvalues({}), Error);
  const OperatorSpec op = OperatorSpec::from_eigenvalues({-3.0, -1.0, 2.0});
  CHECK(op.minus_dim() == 2);
  CHECK(op.largest_negative() == -1.0);
  CHECK(op.smallest_positive() == 2.0);
}

TEST_CASE("semigroup is diagonal and satisfies the semigroup law") {
  const OperatorSpec op = OperatorSpec::from_eigenvalues({-1.0, 2.0, 5.0});
  const ModeVec v = op.vec(Eigen::Vector3d(1.0, -2.0, 0.5));
  const ModeVec t1 = semigroup_apply(op, 0.3, v);
  CHECK(t1[0] == doctest::Approx(std::exp(0.3)));
  CHECK(t1[1] == doctest::Approx(-2.0 * std::exp(-0.6)));
  const ModeVec composed = semigroup_apply(op, 0.5, semigroup_apply(op, 0.3, v));
  const ModeVec direct = semigroup_apply(op, 0.8, v);
  CHECK((composed - direct).norm() < 1e-14);
  CHECK_THROWS_AS(semigroup_apply(op, -0.1, v), Error);
}

TEST_CASE("projections split H and the inverse exists on the minus part only") {
  const OperatorSpec op = OperatorSpec::from_eigenvalues({-2.0, -1.0, 3.0});
  const ModeVec v = op.vec(Eigen::Vector3d(1.0, 2.0, 3.0));
  const ModeVec plus = project(op, Subspace::plus, v);
  const ModeVec minus = project(op, Subspace::minus, v);
  CHECK(((plus + minus) - v).norm() == 0.0);
  CHECK(plus.coords().dot(minus.coords()) == 0.0);
  CHECK(project(op, Subspace::plus, plus).coords() == plus.coords());

  const ModeVec back = semigroup_inverse_minus(op, 0.7, semigroup_apply(op, 0.7, minus));
  CHECK((back - minus).norm() < 1e-14);
  CHECK_THROWS_WITH_AS(semigroup_inverse_minus(op, 0.7, v), doctest::Contains("not-in-minus-subspace"), Error);
}

TEST_CASE("mode vectors from different bases do not mix") {
  const OperatorSpec a = OperatorSpec::from_eigenvalues({1.0, 2.0});
  const OperatorSpec b = OperatorSpec::from_eigenvalues({1.0, 3.0});
  const ModeVec u = a.unit(0);
  const ModeVec v = b.unit(0);
  CHECK(a.basis_id() != b.basis_id());
  CHECK_THROWS_WITH_AS(u + v, doctest::Contains("basis-mismatch"), Error);
  CHECK_THROWS_AS(semigroup_apply(b, 1.0, u), Error);
  CHECK_THROWS_AS(a.vec(Eigen::Vector3d::Zero()), Error);
}
