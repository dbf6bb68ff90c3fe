#include <cmath>
#include <limits>

#include <doctest.h>

#include "rdskit/error.hpp"
#include "rdskit/manifolds.hpp"
#include "rdskit/stationary.hpp"

using namespace rdskit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// dx1 = -x1, dx2 = x2 + x1^2 with x2 in mode 0 (unstable) and x1 in mode 1.
SemiflowModel saddle(double h) {
  auto field = [](const VectorXd& u) {
    VectorXd out = VectorXd::Zero(2);
    out[0] = u[1] * u[1];
    return out;
  };
  auto jac = [](const VectorXd& u) {
    MatrixXd out = MatrixXd::Zero(2, 2);
    out(0, 1) = 2.0 * u[1];
    return out;
  };
  return SemiflowModel(OperatorSpec::from_eigenvalues({-1.0, 1.0}),
                       NonlinearitySpec::callable("saddle", field, jac, std::numeric_limits<double>::infinity()),
                       CovarianceSpec::cylindrical({0.0}), NoiseCoupling::none, StepperConfig{h, 0, 1e8});
}

// Stable graph of the flow by backward RK4 from near the origin.
double rk4_graph(double x1) {
  double a = 1e-5 * (x1 > 0 ? 1 : -1), b = 0.0;
  const double dt = 1e-4;
  auto f = [](double p, double q) { return std::pair{p, -q - p * p}; };
  while (std::abs(a) < std::abs(x1)) {
    const auto [k1a, k1b] = f(a, b);
    const auto [k2a, k2b] = f(a + 0.5 * dt * k1a, b + 0.5 * dt * k1b);
    const auto [k3a, k3b] = f(a + 0.5 * dt * k2a, b + 0.5 * dt * k2b);
    const auto [k4a, k4b] = f(a + dt * k3a, b + dt * k3b);
    a += dt / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
    b += dt / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
  }
  return b / (a * a);
}

struct SaddleFixture {
  SemiflowModel model = saddle(1e-3);
  WienerPath path = zero_path(1, 30.0, 30.0, 1e-3);
  StationaryPoint y = StationaryPoint::constant(model.op().zero(), 1e-3);
  ManifoldParams params;
  Splitting split = [this] {
    SplitOptions so;
    so.unstable_dim = 1;
    so.initial_horizon = 1.0;
    so.max_horizon = 8.0;
    return split_subspaces(model, y, path, so);
  }();
};

}  // namespace

TEST_CASE("graph fit recovers a known quadratic surface") {
  MatrixXd base = MatrixXd::Zero(3, 2);
  base(0, 0) = 1.0;
  base(1, 1) = 1.0;
  MatrixXd normal = MatrixXd::Zero(3, 1);
  normal(2, 0) = 1.0;
  std::vector<VectorXd> pts;
  for (double a0 : {-0.08, -0.03, 0.0, 0.04, 0.09}) {
    for (double a1 : {-0.07, 0.02, 0.06}) {
      pts.push_back((VectorXd(3) << a0, a1, a0 * a0 - 2.0 * a0 * a1 + 0.5 * a1 * a1).finished());
    }
  }
  const GraphFit g = fit_graph(base, normal, VectorXd::Zero(3), pts, 0.1);
  REQUIRE(g.quadratic.cols() == 3);
  CHECK(g.quadratic(0, 0) == doctest::Approx(1.0));
  CHECK(g.quadratic(0, 1) == doctest::Approx(-2.0));
  CHECK(g.quadratic(0, 2) == doctest::Approx(0.5));
  CHECK(g.linear.norm() < 1e-10);
  CHECK(g.rms_residual < 1e-12);
  CHECK(g.contract_ok);
}

TEST_CASE("decay rate stops at the noise floor") {
  std::vector<double> t, d;
  for (int i = 0; i <= 200; ++i) {
    t.push_back(0.1 * i);
    d.push_back(std::max(std::exp(-2.0 * 0.1 * i), 1e-14));
  }
  CHECK(stable_decay_rate(t, d, 1e-12).slope == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("tangent coordinates spread over the ball") {
  const auto c = spread_coordinates(2, 12, 0.1, 3);
  REQUIRE(c.size() == 12);
  int inner = 0;
  for (const auto& v : c) {
    CHECK(v.size() == 2);
    CHECK(v.norm() <= 0.09 + 1e-15);
    CHECK(v.norm() > 0.0);
    inner += v.norm() <= 0.025;
  }
  CHECK(inner >= 6);
  const auto again = spread_coordinates(2, 12, 0.1, 3);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == again[i]);
}

TEST_CASE("parameters from the gap satisfy their own constraints") {
  GapInfo gap;
  gap.hyperbolic = true;
  gap.lambda_i0 = -2.0;
  gap.lambda_i0_minus_1 = 0.5;
  const ManifoldParams p = ManifoldParams::from_gap(gap);
  CHECK_NOTHROW(p.validate());
  CHECK(p.rho1 == doctest::Approx(0.05));
  CHECK(p.eps1 == doctest::Approx(1.0));
  CHECK(p.eps2 == doctest::Approx(0.25));
  ManifoldParams bad = p;
  bad.beta1 = bad.rho1 / 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.eps1 = 3.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("eps1"), Error);
}

TEST_CASE("saddle: brute-force stable graph") {
  for (double x1 : {-0.05, 0.03, 0.08}) CHECK(rk4_graph(x1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("saddle: stable classification against the brute-force graph") {
  SaddleFixture f;
  for (double x1 : {-0.05, 0.03}) {
    const VectorXd on = (VectorXd(2) << rk4_graph(x1) * x1 * x1, x1).finished();
    const StableEvidence in = classify_stable(f.model, f.y, f.path, on, f.params);
    CHECK(in.verdict == StableVerdict::in);
    CHECK(stable_decay_rate(in.times, in.distances).slope == doctest::Approx(-1.0).epsilon(0.02));
    const VectorXd off = on + (VectorXd(2) << 1e-2, 0.0).finished();
    CHECK(classify_stable(f.model, f.y, f.path, off, f.params).verdict == StableVerdict::out);
  }
  const VectorXd far = (VectorXd(2) << 0.0, 0.5).finished();
  CHECK(classify_stable(f.model, f.y, f.path, far, f.params).verdict == StableVerdict::out);
}

TEST_CASE("saddle: sampled stable points lie on the graph and stay invariant") {
  SaddleFixture f;
  const auto coords = spread_coordinates(1, 8, f.params.rho1, 5);
  const auto pts = sample_stable(f.model, f.y, f.path, f.split, coords, f.params);
  REQUIRE(pts.size() == coords.size());
  for (const auto& p : pts) {
    // The discrete scheme's graph deviates from the flow's by O(h x1^2).
    CHECK(std::abs(p[0] + p[1] * p[1] / 3.0) < 1e-3 * p[1] * p[1] + 1e-12);
  }
  const InvarianceReport inv = stable_invariance_check(f.model, f.y, f.path, pts, {0.0, 1.0, 2.0}, f.params);
  for (double frac : inv.fraction) CHECK(frac == 1.0);
}

TEST_CASE("saddle: unstable manifold is the x2 axis with backward rate -1") {
  SaddleFixture f;
  const auto samples = build_unstable(f.model, f.y, f.path, f.split.unstable_basis, f.params, 4);
  REQUIRE_FALSE(samples.empty());
  for (const auto& s : samples) {
    CHECK(std::abs(s.point[1]) < 1e-12);
    CHECK(unstable_backward_rate(s.chain).slope == doctest::Approx(-1.0).epsilon(1e-6));
    for (double c : s.chain.consistency) CHECK(c < 1e-12);
  }
}

TEST_CASE("atlas is independent of the worker count") {
  SaddleFixture f;
  AtlasOptions o;
  o.stable_points = 12;
  o.unstable_points = 8;
  const ManifoldAtlas one = build_atlas(f.model, f.y, f.path, f.split, f.split.unstable_basis, f.params, o);
  o.threads = 3;
  const ManifoldAtlas three = build_atlas(f.model, f.y, f.path, f.split, f.split.unstable_basis, f.params, o);
  REQUIRE(one.stable.size() == three.stable.size());
  for (std::size_t i = 0; i < one.stable.size(); ++i) {
    CHECK(one.stable[i].point == three.stable[i].point);
    CHECK(one.stable[i].evidence.verdict == three.stable[i].evidence.verdict);
  }
  CHECK(one.tangency.stable.quadratic(0, 0) == three.tangency.stable.quadratic(0, 0));
  CHECK(one.tangency.dims_sum_ok);
  CHECK(one.tangency.transversal);
}
