#include "rdskit/stationary_point.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "rdskit/binary_io.hpp"
#include "rdskit/error.hpp"

namespace rdskit {

std::string to_string(StationaryMethod method) {
  switch (method) {
    case StationaryMethod::contraction: return "contraction";
    case StationaryMethod::pullback: return "pullback";
    case StationaryMethod::equilibrium: return "equilibrium";
    case StationaryMethod::constant: return "constant";
  }
  return "unknown";
}

StationaryPoint::StationaryPoint(double h, std::uint64_t basis_id, SeedRecord seed, std::int64_t anchor_steps,
                                 std::int64_t first_index, std::vector<Eigen::VectorXd> values)
    : h_(h), basis_id_(basis_id), seed_(seed), anchor_(anchor_steps), first_(first_index), values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::invalid_argument, "stationary point needs at least one value");
}

StationaryPoint StationaryPoint::constant(const ModeVec& y, double h) {
  StationaryPoint p(h, y.basis_id(), SeedRecord{}, 0, 0, {y.coords()});
  p.constant_ = true;
  p.report_.method = StationaryMethod::constant;
  return p;
}

std::int64_t StationaryPoint::index_for(const WienerPath& path, std::int64_t offset_steps) const {
  if (constant_) return 0;
  if (std::abs(path.step() - h_) > 1e-12 * h_) {
    throw Error(ErrorCode::grid_misaligned, "path grid step differs from the stationary point's");
  }
  if (!(path.seed() == seed_)) {
    throw Error(ErrorCode::invalid_argument, "stationary point was computed on a different noise path");
  }
  const std::int64_t k = path.anchor_steps() + offset_steps - anchor_;
  if (k < first_ || k > last_index()) {
    throw Error(ErrorCode::window_exceeded, "shift " + std::to_string(k) + " outside the stationary window [" +
                                                std::to_string(first_) + ", " + std::to_string(last_index()) + "]");
  }
  return k - first_;
}

const Eigen::VectorXd& StationaryPoint::coords_at(const WienerPath& path, std::int64_t offset_steps) const {
  return values_[static_cast<std::size_t>(index_for(path, offset_steps))];
}

ModeVec StationaryPoint::at(const WienerPath& path, std::int64_t offset_steps) const {
  return ModeVec(coords_at(path, offset_steps), basis_id_);
}

bool StationaryPoint::covers(const WienerPath& path, std::int64_t lo_steps, std::int64_t hi_steps) const {
  if (constant_) return true;
  const std::int64_t lo = path.anchor_steps() + lo_steps - anchor_;
  const std::int64_t hi = path.anchor_steps() + hi_steps - anchor_;
  return lo >= first_ && hi <= last_index();
}

namespace {

void write_vectors(std::ostream& out, const std::vector<Eigen::VectorXd>& vs) {
  io::write_i64(out, static_cast<std::int64_t>(vs.size()));
  for (const auto& v : vs) {
    io::write_i64(out, v.size());
    io::write_f64s(out, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  }
}

std::vector<Eigen::VectorXd> read_vectors(std::istream& in) {
  const std::int64_t count = io::read_i64(in);
  if (count < 0 || count > (1ll << 32)) throw Error(ErrorCode::io_error, "corrupt vector count");
  std::vector<Eigen::VectorXd> vs(static_cast<std::size_t>(count));
  for (auto& v : vs) {
    const std::int64_t n = io::read_i64(in);
    if (n < 0 || n > (1 << 20)) throw Error(ErrorCode::io_error, "corrupt vector length");
    v.resize(n);
    io::read_f64s(in, std::span<double>(v.data(), static_cast<std::size_t>(n)));
  }
  return vs;
}

void write_doubles(std::ostream& out, const std::vector<double>& xs) {
  io::write_i64(out, static_cast<std::int64_t>(xs.size()));
  io::write_f64s(out, xs);
}

std::vector<double> read_doubles(std::istream& in) {
  const std::int64_t n = io::read_i64(in);
  if (n < 0 || n > (1ll << 32)) throw Error(ErrorCode::io_error, "corrupt series length");
  std::vector<double> xs(static_cast<std::size_t>(n));
  io::read_f64s(in, xs);
  return xs;
}

}  // namespace

void StationaryPoint::save(std::ostream& out) const {
  io::write_header(out, io::RecordKind::stationary_point);
  io::write_f64(out, h_);
  io::write_u64(out, basis_id_);
  io::write_u64(out, seed_.seed);
  io::write_u64(out, seed_.past_stream);
  io::write_u64(out, seed_.future_stream);
  io::write_i64(out, anchor_);
  io::write_i64(out, first_);
  io::write_u64(out, constant_ ? 1 : 0);
  write_vectors(out, values_);
  write_vectors(out, convolution_);
  io::write_u64(out, static_cast<std::uint64_t>(report_.method));
  io::write_f64(out, report_.condition_mu);
  io::write_i64(out, report_.iterations);
  io::write_f64(out, report_.drift_tail_bound);
  io::write_f64(out, report_.noise_tail_bound);
  io::write_f64(out, report_.stationarity_residual);
  write_doubles(out, report_.iterate_distances);
  write_doubles(out, report_.sync_times);
  write_doubles(out, report_.sync_gap);
}

StationaryPoint StationaryPoint::load(std::istream& in) {
  io::read_header(in, io::RecordKind::stationary_point);
  StationaryPoint p;
  p.h_ = io::read_f64(in);
  p.basis_id_ = io::read_u64(in);
  p.seed_.seed = io::read_u64(in);
  p.seed_.past_stream = io::read_u64(in);
  p.seed_.future_stream = io::read_u64(in);
  p.anchor_ = io::read_i64(in);
  p.first_ = io::read_i64(in);
  p.constant_ = io::read_u64(in) != 0;
  p.values_ = read_vectors(in);
  p.convolution_ = read_vectors(in);
  const auto method = io::read_u64(in);
  if (method > 3) throw Error(ErrorCode::io_error, "unknown stationary method");
  p.report_.method = static_cast<StationaryMethod>(method);
  p.report_.condition_mu = io::read_f64(in);
  p.report_.iterations = static_cast<int>(io::read_i64(in));
  p.report_.drift_tail_bound = io::read_f64(in);
  p.report_.noise_tail_bound = io::read_f64(in);
  p.report_.stationarity_residual = io::read_f64(in);
  p.report_.iterate_distances = read_doubles(in);
  p.report_.sync_times = read_doubles(in);
  p.report_.sync_gap = read_doubles(in);
  if (p.values_.empty()) throw Error(ErrorCode::io_error, "stationary record has no values");
  return p;
}

}  // namespace rdskit
