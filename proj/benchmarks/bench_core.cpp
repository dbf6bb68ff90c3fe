#include <benchmark/benchmark.h>

#include "rdskit/semiflow.hpp"
#include "rdskit/spectrum.hpp"
#include "rdskit/stationary.hpp"

using namespace rdskit;

namespace {

SemiflowModel burgers(int modes) {
  return SemiflowModel(OperatorSpec::dirichlet_interval(modes, 1.0), NonlinearitySpec::burgers(),
                       CovarianceSpec::power_law(modes, 0.5, 2.0), NoiseCoupling::additive,
                       StepperConfig{1e-3, 0, 1e8});
}

SemiflowModel tanh_saddle() {
  return SemiflowModel(OperatorSpec::from_eigenvalues({-1.0, 1.0}),
                       NonlinearitySpec::tanh_coupling(Eigen::MatrixXd::Constant(2, 2, 0.1), 1.0, Eigen::VectorXd::Zero(2)),
                       CovarianceSpec::cylindrical({0.5, 0.5}), NoiseCoupling::additive, StepperConfig{1e-2, 0, 1e8});
}

void BM_BurgersSteps(benchmark::State& state) {
  const SemiflowModel m = burgers(static_cast<int>(state.range(0)));
  const WienerPath path = sample_path(m.covariance(), 0.0, 1.0, m.h(), 1);
  const ModeVec x = m.op().unit(0);
  for (auto _ : state) benchmark::DoNotOptimize(cocycle_eval_steps(m, 1000, x, path));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_BurgersSteps)->Arg(8)->Arg(32)->Arg(64);

void BM_BurgersTangentSteps(benchmark::State& state) {
  const SemiflowModel m = burgers(static_cast<int>(state.range(0)));
  const WienerPath path = sample_path(m.covariance(), 0.0, 1.0, m.h(), 1);
  const ModeVec x = m.op().unit(0);
  for (auto _ : state) benchmark::DoNotOptimize(tangent_eval_steps(m, 100, x, path));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_BurgersTangentSteps)->Arg(8)->Arg(32);

void BM_LyapunovQr(benchmark::State& state) {
  const SemiflowModel m(OperatorSpec::dirichlet_interval(static_cast<int>(state.range(0)), 1.0), NonlinearitySpec::zero(),
                        CovarianceSpec::cylindrical({0.0}), NoiseCoupling::none, StepperConfig{1e-2, 0, 1e8});
  const WienerPath path = zero_path(1, 1.0, 12.0, m.h());
  const StationaryPoint y = StationaryPoint::constant(m.op().zero(), m.h());
  LyapunovOptions o;
  o.horizon = 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_qr(m, y, path, o));
}
BENCHMARK(BM_LyapunovQr)->Arg(4)->Arg(16)->Arg(32);

void BM_FixedPoint(benchmark::State& state) {
  const SemiflowModel m = tanh_saddle();
  const ShiftWindow w = ShiftWindow::between(m, -1.0, static_cast<double>(state.range(0)));
  const auto cells = fixed_point_cells(m, w, 1e-8);
  const WienerPath path = sample_path(m.covariance(), -cells.first * m.h(), cells.second * m.h(), m.h(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(solve_fixed_point(m, path, w));
}
BENCHMARK(BM_FixedPoint)->Arg(1)->Arg(10);

void BM_SamplePath(benchmark::State& state) {
  const CovarianceSpec cov = CovarianceSpec::power_law(32, 0.5, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_path(cov, 1.0, 1.0, 1e-3, 5));
}
BENCHMARK(BM_SamplePath);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler release, so the entry point is defined here.
BENCHMARK_MAIN();
