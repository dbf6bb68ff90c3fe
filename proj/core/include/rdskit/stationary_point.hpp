#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdskit/noise.hpp"
#include "rdskit/spectral_space.hpp"

namespace rdskit {

enum class StationaryMethod {
  contraction,  // fixed point of the integral equation by Banach iteration
  pullback,     // U(T, x0, theta_{-T} omega) with a synchronization check
  equilibrium,  // deterministic root of the discrete step map
  constant,     // user-supplied shift-independent point
};

std::string to_string(StationaryMethod method);

struct StationaryReport {
  StationaryMethod method = StationaryMethod::constant;
  double condition_mu = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::vector<double> iterate_distances;
  // Largest exponential weight discarded when truncating the drift integrals
  // and the stochastic convolution.
  double drift_tail_bound = 0.0;
  double noise_tail_bound = 0.0;
  double stationarity_residual = std::numeric_limits<double>::quiet_NaN();
  // Pullback only: |u_a(t) - u_b(t)| along the two synchronizing runs.
  std::vector<double> sync_times;
  std::vector<double> sync_gap;
};

/// The random fixed point Y, sampled as Y(theta_{k h} omega) on a window of
/// shift indices k in [first_index, last_index] relative to the anchor of the
/// path it was computed on.
class StationaryPoint {
 public:
  StationaryPoint() = default;
  StationaryPoint(double h, std::uint64_t basis_id, SeedRecord seed, std::int64_t anchor_steps,
                  std::int64_t first_index, std::vector<Eigen::VectorXd> values);

  // A point valid for every shift of every path (deterministic equilibria).
  static StationaryPoint constant(const ModeVec& y, double h);

  bool is_constant() const { return constant_; }
  double step() const { return h_; }
  std::uint64_t basis_id() const { return basis_id_; }
  std::int64_t anchor_steps() const { return anchor_; }
  std::int64_t first_index() const { return first_; }
  std::int64_t last_index() const { return first_ + static_cast<std::int64_t>(values_.size()) - 1; }
  int dim() const { return values_.empty() ? 0 : static_cast<int>(values_.front().size()); }

  const std::vector<Eigen::VectorXd>& values() const { return values_; }
  std::vector<Eigen::VectorXd>& values() { return values_; }
  const std::vector<Eigen::VectorXd>& convolution_part() const { return convolution_; }
  void set_convolution_part(std::vector<Eigen::VectorXd> c) { convolution_ = std::move(c); }

  StationaryReport& report() { return report_; }
  const StationaryReport& report() const { return report_; }

  // Y(theta_{offset} omega) where omega is the (possibly shifted) path.
  // Throws window_exceeded outside the stored window.
  ModeVec at(const WienerPath& path, std::int64_t offset_steps = 0) const;
  const Eigen::VectorXd& coords_at(const WienerPath& path, std::int64_t offset_steps = 0) const;
  bool covers(const WienerPath& path, std::int64_t lo_steps, std::int64_t hi_steps) const;

  void save(std::ostream& out) const;
  static StationaryPoint load(std::istream& in);

 private:
  std::int64_t index_for(const WienerPath& path, std::int64_t offset_steps) const;

  double h_ = 0.0;
  std::uint64_t basis_id_ = 0;
  SeedRecord seed_{};
  std::int64_t anchor_ = 0;
  std::int64_t first_ = 0;
  bool constant_ = false;
  std::vector<Eigen::VectorXd> values_;
  std::vector<Eigen::VectorXd> convolution_;
  StationaryReport report_;
};

}  // namespace rdskit
