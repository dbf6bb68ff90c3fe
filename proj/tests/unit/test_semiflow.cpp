#include <cmath>
#include <random>

#include <doctest.h>

#include "rdskit/error.hpp"
#include "rdskit/semiflow.hpp"
#include "rdskit/stationary.hpp"

using namespace rdskit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SemiflowModel tanh_model(double h = 0.01) {
  MatrixXd c(3, 3);
  c << 0.5, -0.3, 0.2, 0.1, 0.4, -0.6, -0.2, 0.3, 0.5;
  return SemiflowModel(OperatorSpec::from_eigenvalues({-1.0, 1.0, 3.0}),
                       NonlinearitySpec::tanh_coupling(c, 1.5, VectorXd::Constant(3, 0.1)),
                       CovarianceSpec::cylindrical({0.5, 0.5, 0.5}), NoiseCoupling::additive, StepperConfig{h, 0, 1e8});
}

}  // namespace

TEST_CASE("constant forcing is integrated exactly") {
  const Eigen::Vector3d b(0.3, -1.0, 2.0);
  const SemiflowModel m(OperatorSpec::from_eigenvalues({-1.0, 2.0, 5.0}),
                        NonlinearitySpec::tanh_coupling(MatrixXd::Zero(3, 3), 1.0, b), CovarianceSpec::cylindrical({0.0}),
                        NoiseCoupling::none, StepperConfig{0.01, 0, 1e8});
  const WienerPath path = zero_path(1, 0.0, 2.0, 0.01);
  const Eigen::Vector3d x0(1.0, 1.0, -1.0);
  const ModeVec u = cocycle_eval(m, 1.5, m.op().vec(x0), path);
  for (int n = 0; n < 3; ++n) {
    const double mu = m.op().eigenvalue(n);
    const double exact = std::exp(-mu * 1.5) * x0[n] + (1.0 - std::exp(-mu * 1.5)) / mu * b[n];
    CHECK(u[n] == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("multiplicative step follows the Milstein formula") {
  const double h = 0.01;
  const SemiflowModel m(OperatorSpec::from_eigenvalues({1.0, 2.0}), NonlinearitySpec::zero(),
                        CovarianceSpec::cylindrical({0.5, 1.0}), NoiseCoupling::diagonal_multiplicative,
                        StepperConfig{h, 0, 1e8});
  const double dw[] = {0.07, -0.12};
  VectorXd u(2);
  u << 1.3, -0.4;
  const VectorXd u0 = u;
  MatrixXd tangent = MatrixXd::Identity(2, 2);
  m.step(u, dw, &tangent);
  const double sigma[] = {0.5, 1.0};
  for (int n = 0; n < 2; ++n) {
    const double factor =
        std::exp(-(n + 1.0) * h) * (1.0 + sigma[n] * dw[n] + 0.5 * sigma[n] * sigma[n] * (dw[n] * dw[n] - h));
    CHECK(u[n] == doctest::Approx(factor * u0[n]).epsilon(1e-14));
    CHECK(tangent(n, n) == doctest::Approx(factor).epsilon(1e-14));
  }
  CHECK(tangent(0, 1) == 0.0);
}

TEST_CASE("additive noise gain matches the exact stationary variance") {
  for (double h : {0.1, 0.01, 0.001}) {
    const SemiflowModel m(OperatorSpec::from_eigenvalues({0.5, 3.0, 40.0}), NonlinearitySpec::zero(),
                          CovarianceSpec::cylindrical({1.0, 2.0, 0.5}), NoiseCoupling::additive,
                          StepperConfig{h, 0, 1e8});
    for (int n = 0; n < 3; ++n) {
      const double mu = m.op().eigenvalue(n);
      const double a = m.decay()[n];
      const double g = m.noise_gain()[n];
      CHECK(a == doctest::Approx(std::exp(-mu * h)));
      // AR(1) variance g^2 h / (1 - a^2) against 1 / (2 mu) per unit sigma^2.
      CHECK(g * g * h / (1.0 - a * a) == doctest::Approx(1.0 / (2.0 * mu)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cocycle property along random splits") {
  const SemiflowModel m = tanh_model();
  const WienerPath path = sample_path(m.covariance(), 0.0, 5.0, m.h(), 4);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> steps(1, 200);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t k1 = steps(rng), k2 = steps(rng);
    const ModeVec x = m.op().vec(VectorXd::LinSpaced(3, -0.5, 0.8));
    const auto whole = tangent_eval_steps(m, k1 + k2, x, path);
    const auto first = tangent_eval_steps(m, k1, x, path);
    const auto second = tangent_eval_steps(m, k2, first.first, path.shifted_steps(k1));
    CHECK((whole.first - second.first).norm() <= 1e-12 * whole.first.norm());
    CHECK((whole.second - second.second * first.second).norm() <= 1e-12 * whole.second.norm());
  }
}

TEST_CASE("tangent agrees with central differences") {
  const SemiflowModel m = tanh_model();
  const WienerPath path = sample_path(m.covariance(), 0.0, 2.0, m.h(), 6);
  const ModeVec x = m.op().vec(Eigen::Vector3d(0.2, -0.4, 0.9));
  const auto [u, du] = tangent_eval(m, 1.0, x, path);
  for (int k = 0; k < 3; ++k) {
    const double eps = 1e-6;
    const ModeVec up = cocycle_eval(m, 1.0, x + eps * m.op().unit(k), path);
    const ModeVec dn = cocycle_eval(m, 1.0, x - eps * m.op().unit(k), path);
    const VectorXd fd = (up - dn).coords() / (2.0 * eps);
    CHECK((du.col(k) - fd).norm() < 1e-7 * (1.0 + du.col(k).norm()));
  }
}

TEST_CASE("evolve records states on request") {
  const SemiflowModel m = tanh_model();
  const WienerPath path = sample_path(m.covariance(), 0.0, 2.0, m.h(), 6);
  EvolveOptions o;
  o.record_every = 10;
  o.tangent = true;
  const CocycleTrajectory traj = evolve(m, m.op().zero(), path, 0.95, o);
  REQUIRE(traj.states.size() == 11);  // 0, 10, ..., 90 and the final step 95
  CHECK(traj.times.back() == doctest::Approx(0.95));
  CHECK((traj.states.back() - cocycle_eval(m, 0.95, m.op().zero(), path)).norm() == 0.0);
  REQUIRE(traj.final_tangent.has_value());
}

TEST_CASE("centered cocycle vanishes at zero along a stationary point") {
  const SemiflowModel m(OperatorSpec::from_eigenvalues({-1.0, 2.0}), NonlinearitySpec::zero(),
                        CovarianceSpec::cylindrical({1.0, 1.0}), NoiseCoupling::additive, StepperConfig{0.01, 0, 1e8});
  const ShiftWindow w = ShiftWindow::between(m, -2.0, 2.0);
  const auto cells = fixed_point_cells(m, w, 1e-8);
  const WienerPath path = sample_path(m.covariance(), -cells.first * m.h(), cells.second * m.h(), m.h(), 2);
  const StationaryPoint y = solve_fixed_point(m, path, w);
  CHECK(centered_eval(m, y, 1.0, m.op().zero(), path).norm() < 1e-12);
  CHECK(backward_centered_eval(m, y, 1.0, m.op().zero(), path).norm() < 1e-12);
  const MatrixXd j = backward_centered_jacobian(m, y, 1.0, path);
  CHECK(j(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  CHECK(j(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("errors") {
  const SemiflowModel unstable(OperatorSpec::from_eigenvalues({-50.0}), NonlinearitySpec::zero(),
                               CovarianceSpec::cylindrical({0.0}), NoiseCoupling::none, StepperConfig{0.01, 0, 1e8});
  const WienerPath zp = zero_path(1, 0.0, 2.0, 0.01);
  CHECK_THROWS_WITH_AS(cocycle_eval(unstable, 1.0, unstable.op().unit(0), zp), doctest::Contains("blow-up"), Error);

  const SemiflowModel m = tanh_model();
  CHECK_THROWS_AS(m.steps_for(0.015), Error);
  CHECK(m.steps_for(0.5) == 50);
  const WienerPath coarse = sample_path(m.covariance(), 0.0, 1.0, 0.02, 1);
  CHECK_THROWS_AS(cocycle_eval(m, 0.5, m.op().zero(), coarse), Error);
  const WienerPath narrow = sample_path(CovarianceSpec::cylindrical({1.0}), 0.0, 1.0, 0.01, 1);
  CHECK_THROWS_AS(cocycle_eval(m, 0.5, m.op().zero(), narrow), Error);
  const WienerPath shortp = sample_path(m.covariance(), 0.0, 0.2, 0.01, 1);
  CHECK_THROWS_AS(cocycle_eval(m, 0.5, m.op().zero(), shortp), Error);
}
