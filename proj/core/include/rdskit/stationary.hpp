#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rdskit/noise.hpp"
#include "rdskit/semiflow.hpp"
#include "rdskit/spectral_space.hpp"
#include "rdskit/stationary_point.hpp"

namespace rdskit {

/// Shift times t_k = k h for k in [first, last], relative to the path origin.
struct ShiftWindow {
  std::int64_t first = 0;
  std::int64_t last = 0;

  static ShiftWindow symmetric(const SemiflowModel& model, double half_width);
  static ShiftWindow between(const SemiflowModel& model, double t_lo, double t_hi);
  std::int64_t size() const { return last - first + 1; }
};

// Time after which every exponential weight e^{-|mu_n| s} is below tail_tol.
double tail_time(const OperatorSpec& op, double tail_tol);
// Half-open cell range the path must expose for a fixed-point solve on `window`.
std::pair<std::int64_t, std::int64_t> fixed_point_cells(const SemiflowModel& model, const ShiftWindow& window,
                                                        double tail_tol);

struct ConvolutionResult {
  std::vector<Eigen::VectorXd> values;
  double truncation_bound = 0.0;
};

/// Y1(theta_{t_k} omega): for n > m the integral of e^{mu_n s} (B0 dW)_n(s + t_k)
/// over (-inf, 0], for n <= m minus the integral over [0, inf). The sums use
/// the grid of the path with the stepper's per-mode noise gain, so Y1 is an
/// exact orbit of the linear part of the scheme.
ConvolutionResult stochastic_convolution(const SemiflowModel& model, const WienerPath& path,
                                         const ShiftWindow& window, double tail_tol = 1e-8);

// L (1/mu_{m+1} - 1/mu_m), omitting an empty block.
double contraction_constant(const OperatorSpec& op, double lipschitz);

struct FixedPointOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double tail_tol = 1e-8;
  // Initial drift part Z0 on the extended grid, evaluated per shift index;
  // defaults to zero.
  std::function<Eigen::VectorXd(std::int64_t)> initial;
};

/// Banach iteration Z <- M(Z) for the drift part of Y = Z + Y1. M integrates
/// the left-held F(Z + Y1) exactly against the semigroup weights on the
/// shift grid (forward from the left edge for stable modes, backward from the
/// right edge for unstable ones), so the fixed point is an orbit of the
/// discrete cocycle.
StationaryPoint solve_fixed_point(const SemiflowModel& model, const WienerPath& path, const ShiftWindow& window,
                                  const FixedPointOptions& options = {});

struct PullbackOptions {
  double pullback_time = 20.0;
  double tol = 1e-6;
  // Two initial states; default to 0 and the all-ones vector.
  std::optional<Eigen::VectorXd> x0_a;
  std::optional<Eigen::VectorXd> x0_b;
};

/// Y(theta_{t_k} omega) ~ U(T, x0, theta_{t_k - T} omega), accepted only when two
/// initial states have synchronized to within tol across the whole window.
StationaryPoint pullback_estimate(const SemiflowModel& model, const WienerPath& path, const ShiftWindow& window,
                                  const PullbackOptions& options = {});

struct EquilibriumOptions {
  double tol = 1e-12;
  int max_iter = 100;
  std::optional<Eigen::VectorXd> initial;
};

/// Root of -A u + F(u) = 0 by Newton's method. Also a fixed point of the
/// exponential Euler step, so it is stationary for noise-free models and for
/// multiplicative noise when it vanishes on the noisy modes.
StationaryPoint equilibrium_point(const SemiflowModel& model, const EquilibriumOptions& options = {});

/// Walks k -> Y(theta_{k h} omega) for k in [start, end]. Values come from the
/// stored window when it covers the span; otherwise the cocycle is evolved
/// from Y(theta_{start h} omega), which tracks Y only while no unstable
/// direction has amplified the round-off.
class StationaryTrack {
 public:
  StationaryTrack(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path, std::int64_t start,
                  std::int64_t end);

  std::int64_t index() const { return k_; }
  const Eigen::VectorXd& state() const { return u_; }
  bool from_window() const { return lookup_; }
  // One step; `tangent` is advanced by the step Jacobian at the current state.
  void advance(Eigen::MatrixXd* tangent = nullptr);

 private:
  const SemiflowModel* model_;
  const StationaryPoint* y_;
  const WienerPath* path_;
  std::int64_t k_;
  std::int64_t end_;
  bool lookup_;
  Eigen::VectorXd u_;
};

/// max over grid times t in [0, horizon] of
///   |U(t, Y(omega), omega) - Y(theta_t omega)| / (1 + |Y(theta_t omega)|).
double stationarity_residual(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                             double horizon);

}  // namespace rdskit
