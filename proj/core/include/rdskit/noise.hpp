#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rdskit {

enum class CovarianceKind {
  cylindrical,  // independent scalar Wiener processes scaled by sigma_n
  additive_b0,  // explicit matrix mapping noise modes to state modes
};

/// Truncated description of the noise covariance: how the path's independent
/// scalar Wiener processes enter the state equation.
struct CovarianceSpec {
  CovarianceKind kind = CovarianceKind::cylindrical;
  std::vector<double> sigma;
  Eigen::MatrixXd b0;  // state modes x noise modes; used for additive_b0
  // Bound on sum_{n > mode_count} |sigma_n| for the discarded part of the sequence.
  double tail_bound = 0.0;

  static CovarianceSpec cylindrical(std::vector<double> sigma, double tail_bound = 0.0);
  // sigma_n = amplitude * n^(-decay), decay > 1; the tail bound is the integral
  // estimate amplitude * N^(1 - decay) / (decay - 1).
  static CovarianceSpec power_law(int mode_count, double amplitude, double decay);
  static CovarianceSpec from_matrix(Eigen::MatrixXd b0);

  int mode_count() const;
  // The N x K coupling matrix B0; cylindrical amplitudes land on the diagonal.
  Eigen::MatrixXd coupling(int state_dim) const;
  // Hilbert-Schmidt norm of the coupling.
  double hilbert_schmidt_norm() const;
};

struct SeedRecord {
  std::uint64_t seed = 0;
  // Stream tags fed into the seed sequence together with `seed`.
  std::uint64_t past_stream = 0;
  std::uint64_t future_stream = 1;

  bool operator==(const SeedRecord&) const = default;
};

/// A two-sided multi-mode Brownian path on a uniform grid.
///
/// Cell `c` covers [c*h, (c+1)*h) measured from the path's current origin;
/// the stored increments are i.i.d. N(0, h) per mode. Shifting re-anchors the
/// origin without copying: value(s) of the shifted path equals
/// old.value(t + s) - old.value(t), and W(0) = 0 always.
class WienerPath {
 public:
  WienerPath() = default;

  double step() const { return data_->h; }
  int mode_count() const { return data_->modes; }
  const SeedRecord& seed() const { return data_->seed; }

  // Cumulative shift applied since sampling, in cells and in time units.
  std::int64_t anchor_steps() const { return anchor_; }
  double anchor() const { return static_cast<double>(anchor_) * data_->h; }

  // Half-open range of cells available relative to the current origin.
  std::int64_t first_cell() const { return -data_->n_back - anchor_; }
  std::int64_t end_cell() const { return data_->n_fwd - anchor_; }
  bool contains_cells(std::int64_t begin, std::int64_t end) const {
    return begin >= first_cell() && end <= end_cell();
  }

  // Increments of every mode over cell `c`; throws out_of_window.
  std::span<const double> cell(std::int64_t c) const;
  double increment(int mode, std::int64_t c) const { return cell(c)[static_cast<std::size_t>(mode)]; }

  // Path value at a grid-aligned time (prefix sum from the origin).
  double value(int mode, double t) const;
  // Same value reconstructed from the left end of the stored window; agrees
  // with value() to round-off.
  double value_from_left_end(int mode, double t) const;

  // Returns theta(t) applied to this path. t must be a multiple of h.
  WienerPath shifted(double t) const;
  WienerPath shifted_steps(std::int64_t steps) const;

  // Aggregates groups of `factor` cells into one cell of width factor*h.
  // Requires the stored window and the anchor to be divisible by `factor`.
  WienerPath coarsened(int factor) const;

  // Largest |increment| difference against another path over the cells both
  // expose; zero when the two views carry identical increments.
  double max_increment_difference(const WienerPath& other) const;

  void save(std::ostream& out) const;
  static WienerPath load(std::istream& in);

  // Converts a grid-aligned duration to a cell count; throws grid_misaligned.
  std::int64_t steps_for(double t) const;

 private:
  struct Storage {
    double h = 0.0;
    int modes = 0;
    std::int64_t n_back = 0;
    std::int64_t n_fwd = 0;
    SeedRecord seed;
    std::vector<double> increments;  // cell-major, cells -n_back .. n_fwd-1
  };

  friend WienerPath sample_path(const CovarianceSpec&, double, double, double, std::uint64_t);
  friend WienerPath path_from_increments(double, int, std::int64_t, std::vector<double>);

  std::shared_ptr<const Storage> data_;
  std::int64_t anchor_ = 0;
};

/// Samples a path with i.i.d. N(0, h) increments on [-t_back, t_fwd]. Cells
/// at negative times come from one seeded stream (drawn outward from 0) and
/// cells at non-negative times from another, so enlarging either side never
/// changes the increments already drawn on the other.
WienerPath sample_path(const CovarianceSpec& cov, double t_back, double t_fwd, double h,
                       std::uint64_t seed);

// Builds a path from explicit increments (cell-major, starting at cell -n_back).
// Used for deterministic models (all-zero increments) and tests.
WienerPath path_from_increments(double h, int modes, std::int64_t n_back, std::vector<double> increments);

// A noise-free path: every increment is zero.
WienerPath zero_path(int modes, double t_back, double t_fwd, double h);

/// Weight s -> exp(rate * s) on [lower, upper]; either bound may be infinite
/// provided the weight decays on that side.
struct ExponentialWeight {
  double rate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct WeightedIntegral {
  double value = 0.0;
  // Largest weight discarded by truncating an infinite side (0 if none).
  double truncation_bound = 0.0;
  std::int64_t first_cell = 0;
  std::int64_t end_cell = 0;
};

/// Left-point Ito sum  sum_j exp(rate * s_j) * dW_mode(cell j)  over the cells
/// whose left points s_j lie in [lower, upper). Infinite sides are truncated
/// where the weight drops below tail_tol.
WeightedIntegral weighted_integral(const WienerPath& path, int mode, const ExponentialWeight& weight,
                                   double tail_tol = 1e-8);

}  // namespace rdskit
