#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rdskit/noise.hpp"
#include "rdskit/semiflow.hpp"
#include "rdskit/stationary_point.hpp"

namespace rdskit {

struct GapInfo {
  bool hyperbolic = false;
  // 1-based index of the largest negative exponent; count + 1 when all are positive.
  int i0 = 0;
  double lambda_i0 = -std::numeric_limits<double>::infinity();
  double lambda_i0_minus_1 = std::numeric_limits<double>::infinity();
  // Number of positive exponents counted with multiplicity.
  int unstable_dim = 0;
  // Index of the exponent that broke hyperbolicity, -1 if none.
  int offending = -1;
};

struct LyapunovReport {
  std::vector<double> exponents;  // non-increasing
  std::vector<double> std_errors;
  std::vector<int> multiplicities;
  GapInfo gap;
  double horizon = 0.0;
  int reorth_every = 1;
  double h = 0.0;
  int batches = 0;
  // Running estimates (1/t) sum log R_jj, in QR column order.
  std::vector<double> series_times;
  std::vector<std::vector<double>> series;
};

struct LyapunovOptions {
  double horizon = 100.0;
  int reorth_every = 1;  // steps between QR re-orthonormalizations
  int count = 0;         // tangent vectors; 0 means all N
  int batches = 20;
  double zero_band = 1e-3;
  double merge_floor = 1e-3;
  std::int64_t start_shift = 0;  // in steps
  std::optional<Eigen::MatrixXd> initial_frame;
  int max_series_points = 1000;
};

/// Discrete QR method along the stationary trajectory starting at Y(omega).
LyapunovReport lyapunov_qr(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                           const LyapunovOptions& options = {});

// Groups sorted exponents whose distance is within max(3 combined standard
// errors, floor).
std::vector<int> group_multiplicities(const std::vector<double>& exponents, const std::vector<double>& std_errors,
                                      double floor = 1e-3);

// Gap around zero following the sentinel conventions: lambda_i0 = -inf when
// every exponent is positive, lambda_{i0-1} = +inf when every exponent is
// negative. An exponent within zero_band + 3 SE of zero is not hyperbolic.
GapInfo hyperbolicity_gap(const std::vector<double>& exponents, const std::vector<double>& std_errors,
                          double zero_band);
inline GapInfo hyperbolicity_gap(const LyapunovReport& report, double zero_band) {
  return hyperbolicity_gap(report.exponents, report.std_errors, zero_band);
}

struct SubspaceConvergence {
  double horizon = 0.0;
  double angle = 0.0;  // against the estimate at the previous horizon
};

struct Splitting {
  Eigen::MatrixXd stable_basis;
  Eigen::MatrixXd unstable_basis;
  std::int64_t at_shift = 0;  // anchor of the path the splitting belongs to, in steps
  std::vector<SubspaceConvergence> unstable_history;
  std::vector<SubspaceConvergence> stable_history;
  double min_angle = 0.0;  // smallest principal angle between the two subspaces
  int dim() const { return static_cast<int>(stable_basis.rows()); }
};

struct SplitOptions {
  int unstable_dim = 0;
  double initial_horizon = 2.0;
  double max_horizon = 256.0;
  double tol = 1e-8;
  bool want_stable = true;
  bool want_unstable = true;
};

// Flips each column so its largest-magnitude entry is positive.
void canonicalize_orientation(Eigen::MatrixXd& basis);

/// U(omega): leading left singular vectors of DU(T, Y(theta_{-T} omega), theta_{-T} omega).
/// S(omega): orthogonal complement of the leading right singular vectors of
/// DU(T, Y(omega), omega), i.e. of the leading left singular vectors of the
/// adjoint. T doubles until successive estimates agree within tol.
Splitting split_subspaces(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                          const SplitOptions& options);

// DU(T) along the stationary trajectory from shift `start` (steps), scaled by a
// positive factor to stay in range; singular vectors are unaffected.
Eigen::MatrixXd scaled_linearization(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                     std::int64_t start, std::int64_t steps);

struct DichotomyOptions {
  double delta1 = 0.5;
  double delta2 = 0.5;
  double horizon = 20.0;
  int random_samples = 8;
  std::uint64_t seed = 1;
  // Candidate vectors; ones outside both subspaces are filtered out.
  std::vector<Eigen::VectorXd> extra;
  double membership_tol = 1e-6;
  // tau* counts as finite when it is at most this fraction of the horizon.
  double finite_fraction = 0.8;
};

struct DichotomySample {
  Subspace side = Subspace::plus;  // plus: stable, minus: unstable
  Eigen::VectorXd x;
  double tau = 0.0;
  bool finite = true;
};

struct DichotomyReport {
  std::vector<DichotomySample> samples;
  double max_tau_unstable = 0.0;
  double max_tau_stable = 0.0;
  int violations = 0;  // samples whose tau* is not finite
  int filtered = 0;
};

/// Empirical first times after which |T(t) x| >= e^{delta1 t}|x| on U(omega)
/// and |T(t) x| <= e^{-delta2 t}|x| on S(omega) hold through the horizon.
DichotomyReport dichotomy_check(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                const Splitting& split, const DichotomyOptions& options);

}  // namespace rdskit
