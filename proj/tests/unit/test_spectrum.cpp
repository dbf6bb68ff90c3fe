#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <doctest.h>

#include "rdskit/error.hpp"
#include "rdskit/linalg.hpp"
#include "rdskit/spectrum.hpp"
#include "rdskit/stationary.hpp"

using namespace rdskit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SemiflowModel deterministic(OperatorSpec op, NonlinearitySpec f = NonlinearitySpec::zero(), double h = 0.01) {
  return SemiflowModel(std::move(op), std::move(f), CovarianceSpec::cylindrical({0.0}), NoiseCoupling::none,
                       StepperConfig{h, 0, 1e8});
}

StationaryPoint origin(const SemiflowModel& m) { return StationaryPoint::constant(m.op().zero(), m.h()); }

}  // namespace

TEST_CASE("linear exponents and multiplicities on the square") {
  const SemiflowModel m = deterministic(OperatorSpec::dirichlet_box(6, 2, 0.05));
  const WienerPath path = zero_path(1, 1.0, 12.0, m.h());
  LyapunovOptions o;
  o.horizon = 10.0;
  const LyapunovReport rep = lyapunov_qr(m, origin(m), path, o);
  REQUIRE(rep.exponents.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(rep.exponents[static_cast<std::size_t>(i)] == doctest::Approx(-m.op().eigenvalue(i)).epsilon(1e-10));
  CHECK(rep.multiplicities == std::vector<int>{1, 2, 1, 2});
  CHECK(rep.gap.hyperbolic);
  CHECK(rep.gap.unstable_dim == 0);
  CHECK(std::isinf(rep.gap.lambda_i0_minus_1));
  CHECK_FALSE(rep.series.empty());

  o.reorth_every = 5;
  o.count = 2;
  const LyapunovReport sparse = lyapunov_qr(m, origin(m), path, o);
  REQUIRE(sparse.exponents.size() == 2);
  CHECK(sparse.exponents[0] == doctest::Approx(rep.exponents[0]).epsilon(1e-10));
  CHECK(sparse.exponents[1] == doctest::Approx(rep.exponents[1]).epsilon(1e-10));
}

TEST_CASE("gap conventions") {
  const GapInfo neg = hyperbolicity_gap({-1.0, -2.0}, {0.0, 0.0}, 1e-3);
  CHECK(neg.hyperbolic);
  CHECK(neg.i0 == 1);
  CHECK(neg.lambda_i0 == -1.0);
  CHECK(neg.lambda_i0_minus_1 == std::numeric_limits<double>::infinity());

  const GapInfo pos = hyperbolicity_gap({3.0, 1.0}, {0.0, 0.0}, 1e-3);
  CHECK(pos.i0 == 3);
  CHECK(pos.unstable_dim == 2);
  CHECK(pos.lambda_i0 == -std::numeric_limits<double>::infinity());
  CHECK(pos.lambda_i0_minus_1 == 1.0);

  const GapInfo mixed = hyperbolicity_gap({2.0, 0.5, -0.7}, {0.0, 0.0, 0.0}, 1e-3);
  CHECK(mixed.i0 == 3);
  CHECK(mixed.lambda_i0 == -0.7);
  CHECK(mixed.lambda_i0_minus_1 == 0.5);

  const GapInfo zero = hyperbolicity_gap({1.0, 0.01, -1.0}, {0.0, 0.005, 0.0}, 1e-3);
  CHECK_FALSE(zero.hyperbolic);
  CHECK(zero.offending == 1);

  CHECK(group_multiplicities({1.0, 0.9995, -2.0}, {}, 1e-3) == std::vector<int>{2, 1});
  CHECK(group_multiplicities({1.0, 0.9, -2.0}, {0.05, 0.05, 0.0}, 1e-3) == std::vector<int>{2, 1});
}

TEST_CASE("Oseledets splitting of a non-normal linear system matches its eigenvectors") {
  MatrixXd coupling(3, 3);
  coupling << 0, 2, -1, 0, 0, 3, 0, 0, 0;
  const SemiflowModel m =
      deterministic(OperatorSpec::from_eigenvalues({-1.0, 2.0, 3.0}), NonlinearitySpec::linear(coupling));
  const WienerPath path = zero_path(1, 80.0, 80.0, m.h());
  SplitOptions so;
  so.unstable_dim = 1;
  so.initial_horizon = 2.0;
  so.max_horizon = 64.0;
  const Splitting split = split_subspaces(m, origin(m), path, so);

  // Oracle: eigenvectors of the one-step map, which is constant here.
  const MatrixXd j = tangent_eval_steps(m, 1, m.op().zero(), path).second;
  Eigen::EigenSolver<MatrixXd> es(j);
  MatrixXd unstable(3, 1), stable(3, 2);
  int s = 0;
  for (int i = 0; i < 3; ++i) {
    const VectorXd v = es.eigenvectors().col(i).real();
    if (std::abs(es.eigenvalues()[i]) > 1.0) {
      unstable.col(0) = v;
    } else {
      stable.col(s++) = v;
    }
  }
  REQUIRE(s == 2);
  CHECK(subspace_distance(split.unstable_basis, orthonormal_basis(unstable)) < 1e-6);
  CHECK(subspace_distance(split.stable_basis, orthonormal_basis(stable)) < 1e-6);
  CHECK(split.min_angle > 0.0);
  CHECK(split.min_angle < std::numbers::pi / 2 - 1e-3);  // non-normal: not orthogonal

  DichotomyOptions d;
  d.delta1 = 0.5;
  d.delta2 = 0.5;
  d.horizon = 10.0;
  const DichotomyReport rep = dichotomy_check(m, origin(m), path, split, d);
  CHECK(rep.violations == 0);
  CHECK_FALSE(rep.samples.empty());
}

TEST_CASE("dichotomy times are zero on a diagonal saddle and infinite for a too-strict rate") {
  const SemiflowModel m = deterministic(OperatorSpec::from_eigenvalues({-1.0, 1.0}));
  const WienerPath path = zero_path(1, 40.0, 40.0, m.h());
  SplitOptions so;
  so.unstable_dim = 1;
  const Splitting split = split_subspaces(m, origin(m), path, so);
  DichotomyOptions d;
  d.delta1 = d.delta2 = 0.9;
  d.horizon = 10.0;
  const DichotomyReport ok = dichotomy_check(m, origin(m), path, split, d);
  CHECK(ok.max_tau_stable == 0.0);
  CHECK(ok.max_tau_unstable == 0.0);
  d.delta1 = d.delta2 = 1.1;
  const DichotomyReport strict = dichotomy_check(m, origin(m), path, split, d);
  CHECK(strict.violations == static_cast<int>(strict.samples.size()));
}
