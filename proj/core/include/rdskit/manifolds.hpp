#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "rdskit/linalg.hpp"
#include "rdskit/noise.hpp"
#include "rdskit/semiflow.hpp"
#include "rdskit/spectrum.hpp"
#include "rdskit/stationary_point.hpp"

namespace rdskit {

/// Radii, envelopes and horizons for the local manifold predicates. The
/// envelope rates are lambda_i0 + eps1 (stable) and lambda_{i0-1} - eps2
/// (unstable).
struct ManifoldParams {
  double rho1 = 0.1;
  double rho2 = 0.1;
  double beta1 = 0.2;
  double beta2 = 0.2;
  double lambda_i0 = -1.0;
  double lambda_i0_minus_1 = 1.0;
  double eps1 = 0.5;
  double eps2 = 0.5;
  int n_max = 5;
  double t_back = 10.0;
  int chain_depth = 10;
  int samples_per_unit = 10;
  double noise_floor = 1e-12;
  double boundary_fraction = 0.8;
  int max_shrink = 20;

  // rho = 0.1 * gap scale, beta = 2 rho clipped into (rho, 1), eps at half
  // the distance from each gap edge to zero.
  static ManifoldParams from_gap(const GapInfo& gap);
  // Throws invalid_argument naming the violated constraint.
  void validate() const;
  double stable_rate() const { return lambda_i0 + eps1; }
  double unstable_rate() const { return lambda_i0_minus_1 - eps2; }
};

enum class StableVerdict { in, out, boundary };
const char* to_string(StableVerdict v);

struct StableEvidence {
  StableVerdict verdict = StableVerdict::out;
  int first_failure = -1;                 // integer time of the first envelope violation
  std::vector<double> integer_distances;  // |Z(n, x, omega)|, n = 0..n_max
  std::vector<double> times;              // fine series for rate estimates
  std::vector<double> distances;
};

/// Tests |U(n, x, omega) - Y(theta_n omega)| <= beta1 e^{(lambda_i0 + eps1) n}
/// for n = 0..n_max; points outside B(Y(omega), rho1) are out.
StableEvidence classify_stable(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                               const Eigen::VectorXd& x, const ManifoldParams& params);

/// Slope of log distance against time over the prefix above the noise floor.
LineFit stable_decay_rate(const std::vector<double>& times, const std::vector<double>& distances,
                          double noise_floor = 1e-12);

struct LipschitzEstimate {
  LineFit fit;
  std::vector<double> times;
  std::vector<double> sup_ratio;
};

/// Growth rate of sup over pairs of |U(t, x1) - U(t, x2)| / |x1 - x2|.
LipschitzEstimate stable_lipschitz_exponent(const SemiflowModel& model, const WienerPath& path,
                                            const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
                                            double horizon, const ManifoldParams& params);

/// Points x = Y + S a + U b on the local stable manifold: for each tangent
/// coordinate a, Newton's method picks b so the component of
/// U(n_max, x, omega) - Y(theta_{n_max} omega) along the leading left
/// singular directions of the linearization vanishes.
std::vector<Eigen::VectorXd> sample_stable(const SemiflowModel& model, const StationaryPoint& y,
                                           const WienerPath& path, const Splitting& split,
                                           const std::vector<Eigen::VectorXd>& tangent_coords,
                                           const ManifoldParams& params);

// Tangent coordinates with radii spread over (0, 0.9 rho], half of them inside rho/4.
std::vector<Eigen::VectorXd> spread_coordinates(int dim, int count, double rho, std::uint64_t seed);

struct HistoryChain {
  std::vector<Eigen::VectorXd> points;  // y(-n, omega), n = 0..depth
  std::vector<double> distances;        // |y(-n) - Y(theta_{-n} omega)|
  std::vector<double> consistency;      // |U(1, y(-n), theta_{-n} omega) - y(-(n-1))|, n = 1..depth
  int depth() const { return static_cast<int>(points.size()) - 1; }
  bool truncated = false;
};

struct UnstableSample {
  Eigen::VectorXd point;
  HistoryChain chain;
  double offset = 0.0;  // seed distance from Y(theta_{-T_back} omega)
  int shrinks = 0;
};

/// Pushes Y(theta_{-T} omega) + s d forward to time 0 for directions d in
/// U(theta_{-T} omega), keeping orbits that land in B(Y(omega), rho2) and
/// satisfy |y(-n) - Y(theta_{-n} omega)| <= beta2 e^{-(lambda_{i0-1} - eps2) n}.
std::vector<UnstableSample> build_unstable(const SemiflowModel& model, const StationaryPoint& y,
                                           const WienerPath& path, const Eigen::MatrixXd& unstable_basis_past,
                                           const ManifoldParams& params, int n_points, std::uint64_t seed = 7);

// Slope of log |y(-n) - Y(theta_{-n} omega)| against n.
LineFit unstable_backward_rate(const HistoryChain& chain, double noise_floor = 1e-12);
// Slope of log |y_a(-n) - y_b(-n)| against n.
LineFit pairwise_backward_rate(const HistoryChain& a, const HistoryChain& b, double noise_floor = 1e-12);

struct InvarianceReport {
  std::vector<double> t;
  std::vector<double> fraction;  // in / (in + out); boundary verdicts excluded
  std::vector<int> in;
  std::vector<int> out;
  std::vector<int> boundary;
  double tau1 = std::numeric_limits<double>::quiet_NaN();
};

/// Maps stable points forward by t and re-classifies them against the
/// envelope anchored at Y(theta_t omega).
InvarianceReport stable_invariance_check(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                         const std::vector<Eigen::VectorXd>& stable_points,
                                         const std::vector<double>& t_list, const ManifoldParams& params);

/// Local fit b = L a + Q [a_i a_j]_{i<=j} of a manifold as a graph over its
/// candidate tangent space.
struct GraphFit {
  Eigen::MatrixXd linear;
  Eigen::MatrixXd quadratic;
  double radius = 0.0;
  double rms_residual = 0.0;
  int samples = 0;
  bool contract_ok = true;  // |L| <= 1e-3 |Q| radius + 1e-10
};

struct TangencyReport {
  GraphFit stable;
  GraphFit unstable;
  int stable_dim = 0;
  int unstable_dim = 0;
  bool dims_sum_ok = false;
  double min_angle = 0.0;
  double angle_floor = 1e-3;
  bool transversal = false;
};

GraphFit fit_graph(const Eigen::MatrixXd& base, const Eigen::MatrixXd& normal, const Eigen::VectorXd& anchor,
                   const std::vector<Eigen::VectorXd>& points, double radius);

TangencyReport tangency_and_transversality(const Eigen::VectorXd& anchor, const std::vector<Eigen::VectorXd>& stable_points,
                                           const std::vector<Eigen::VectorXd>& unstable_points, const Splitting& split,
                                           const ManifoldParams& params, double angle_floor = 1e-3);

struct StableSample {
  Eigen::VectorXd point;
  StableEvidence evidence;
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
};

struct ManifoldAtlas {
  Eigen::VectorXd anchor;
  std::int64_t shift = 0;
  ManifoldParams params;
  std::vector<StableSample> stable;
  std::vector<UnstableSample> unstable;
  TangencyReport tangency;
  InvarianceReport invariance;
  LipschitzEstimate lipschitz;
  bool has_lipschitz = false;
};

struct AtlasOptions {
  int stable_points = 12;
  int unstable_points = 8;
  std::vector<double> invariance_times = {0.0, 1.0, 2.0};
  std::uint64_t seed = 11;
  int threads = 1;  // workers for classifying stable samples
};

/// Samples, classifies and fits both manifolds at Y(omega).
ManifoldAtlas build_atlas(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                          const Splitting& split, const Eigen::MatrixXd& unstable_basis_past,
                          const ManifoldParams& params, const AtlasOptions& options = {});

}  // namespace rdskit
