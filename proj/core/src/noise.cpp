#include "rdskit/noise.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "rdskit/binary_io.hpp"
#include "rdskit/error.hpp"

namespace rdskit {
namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::int64_t cells_for(double t, double h, const char* what) {
  const double ratio = t / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw Error(ErrorCode::grid_misaligned, std::string(what) + " is not a multiple of the grid step");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

// ---------------------------------------------------------------------------
// CovarianceSpec

CovarianceSpec CovarianceSpec::cylindrical(std::vector<double> sigma, double tail_bound) {
  if (sigma.empty()) throw Error(ErrorCode::invalid_argument, "covariance needs at least one mode");
  for (double s : sigma) {
    if (!std::isfinite(s)) throw Error(ErrorCode::invalid_argument, "noise amplitudes must be finite");
  }
  if (!(tail_bound >= 0.0) || !std::isfinite(tail_bound)) {
    throw Error(ErrorCode::invalid_argument, "tail bound must be finite and non-negative");
  }
  CovarianceSpec spec;
  spec.kind = CovarianceKind::cylindrical;
  spec.sigma = std::move(sigma);
  spec.tail_bound = tail_bound;
  return spec;
}

CovarianceSpec CovarianceSpec::power_law(int mode_count, double amplitude, double decay) {
  if (mode_count < 1) throw Error(ErrorCode::invalid_argument, "mode_count must be positive");
  if (!(decay > 1.0)) throw Error(ErrorCode::invalid_argument, "power-law decay must exceed 1");
  std::vector<double> sigma(static_cast<std::size_t>(mode_count));
  for (int n = 1; n <= mode_count; ++n) sigma[static_cast<std::size_t>(n - 1)] = amplitude * std::pow(n, -decay);
  const double tail = std::abs(amplitude) * std::pow(mode_count, 1.0 - decay) / (decay - 1.0);
  return cylindrical(std::move(sigma), tail);
}

CovarianceSpec CovarianceSpec::from_matrix(Eigen::MatrixXd b0) {
  if (b0.rows() < 1 || b0.cols() < 1) throw Error(ErrorCode::invalid_argument, "B0 must be non-empty");
  if (!b0.allFinite()) throw Error(ErrorCode::invalid_argument, "B0 entries must be finite");
  CovarianceSpec spec;
  spec.kind = CovarianceKind::additive_b0;
  spec.b0 = std::move(b0);
  spec.sigma.assign(static_cast<std::size_t>(spec.b0.cols()), 1.0);
  return spec;
}

int CovarianceSpec::mode_count() const {
  return kind == CovarianceKind::additive_b0 ? static_cast<int>(b0.cols()) : static_cast<int>(sigma.size());
}

Eigen::MatrixXd CovarianceSpec::coupling(int state_dim) const {
  if (kind == CovarianceKind::additive_b0) {
    if (b0.rows() != state_dim) {
      throw Error(ErrorCode::invalid_argument, "B0 row count does not match the state dimension");
    }
    return b0;
  }
  const int k = mode_count();
  if (k > state_dim) {
    throw Error(ErrorCode::invalid_argument, "more noise amplitudes than state modes");
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(state_dim, k);
  for (int n = 0; n < k; ++n) b(n, n) = sigma[static_cast<std::size_t>(n)];
  return b;
}

double CovarianceSpec::hilbert_schmidt_norm() const {
  if (kind == CovarianceKind::additive_b0) return b0.norm();
  double s = 0.0;
  for (double x : sigma) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// WienerPath

std::span<const double> WienerPath::cell(std::int64_t c) const {
  const std::int64_t absolute = c + anchor_;
  if (absolute < -data_->n_back || absolute >= data_->n_fwd) {
    throw Error(ErrorCode::out_of_window, "cell " + std::to_string(c) + " is outside the stored path");
  }
  const auto offset = static_cast<std::size_t>((absolute + data_->n_back) * data_->modes);
  return {data_->increments.data() + offset, static_cast<std::size_t>(data_->modes)};
}

std::int64_t WienerPath::steps_for(double t) const { return cells_for(t, data_->h, "time"); }

double WienerPath::value(int mode, double t) const {
  const std::int64_t k = steps_for(t);
  double sum = 0.0;
  if (k > 0) {
    for (std::int64_t c = 0; c < k; ++c) sum += increment(mode, c);
  } else {
    for (std::int64_t c = k; c < 0; ++c) sum -= increment(mode, c);
  }
  return sum;
}

double WienerPath::value_from_left_end(int mode, double t) const {
  const std::int64_t k = steps_for(t);
  const std::int64_t lo = first_cell();
  if (k < lo || k > end_cell()) throw Error(ErrorCode::out_of_window, "time outside the stored path");
  double at_k = 0.0;
  double at_origin = 0.0;
  const std::int64_t stop = std::max<std::int64_t>(k, 0);
  double running = 0.0;
  for (std::int64_t c = lo; c < stop; ++c) {
    if (c == k) at_k = running;
    if (c == 0) at_origin = running;
    running += increment(mode, c);
  }
  if (k == stop) at_k = running;
  if (stop == 0) at_origin = running;
  return at_k - at_origin;
}

WienerPath WienerPath::shifted_steps(std::int64_t steps) const {
  const std::int64_t origin = anchor_ + steps;
  if (origin < -data_->n_back || origin > data_->n_fwd) {
    throw Error(ErrorCode::out_of_window, "shift by " + std::to_string(steps) + " steps leaves the stored window");
  }
  WienerPath out = *this;
  out.anchor_ = origin;
  return out;
}

WienerPath WienerPath::shifted(double t) const { return shifted_steps(steps_for(t)); }

WienerPath WienerPath::coarsened(int factor) const {
  if (factor < 1) throw Error(ErrorCode::invalid_argument, "coarsening factor must be positive");
  if (data_->n_back % factor != 0 || data_->n_fwd % factor != 0 || anchor_ % factor != 0) {
    throw Error(ErrorCode::grid_misaligned, "window not divisible by the coarsening factor");
  }
  auto storage = std::make_shared<Storage>();
  storage->h = data_->h * factor;
  storage->modes = data_->modes;
  storage->n_back = data_->n_back / factor;
  storage->n_fwd = data_->n_fwd / factor;
  storage->seed = data_->seed;
  const auto modes = static_cast<std::size_t>(data_->modes);
  const std::int64_t coarse_cells = storage->n_back + storage->n_fwd;
  storage->increments.assign(static_cast<std::size_t>(coarse_cells) * modes, 0.0);
  for (std::int64_t c = 0; c < coarse_cells; ++c) {
    for (int f = 0; f < factor; ++f) {
      const auto src = static_cast<std::size_t>(c * factor + f) * modes;
      for (std::size_t m = 0; m < modes; ++m) {
        storage->increments[static_cast<std::size_t>(c) * modes + m] += data_->increments[src + m];
      }
    }
  }
  WienerPath out;
  out.data_ = std::move(storage);
  out.anchor_ = anchor_ / factor;
  return out;
}

double WienerPath::max_increment_difference(const WienerPath& other) const {
  if (other.mode_count() != mode_count()) return std::numeric_limits<double>::infinity();
  const std::int64_t lo = std::max(first_cell(), other.first_cell());
  const std::int64_t hi = std::min(end_cell(), other.end_cell());
  double worst = 0.0;
  for (std::int64_t c = lo; c < hi; ++c) {
    const auto a = cell(c);
    const auto b = other.cell(c);
    for (std::size_t m = 0; m < a.size(); ++m) worst = std::max(worst, std::abs(a[m] - b[m]));
  }
  return worst;
}

void WienerPath::save(std::ostream& out) const {
  io::write_header(out, io::RecordKind::wiener_path);
  io::write_f64(out, data_->h);
  io::write_i64(out, data_->n_back);
  io::write_i64(out, data_->n_fwd);
  io::write_i64(out, data_->modes);
  io::write_i64(out, anchor_);
  io::write_u64(out, data_->seed.seed);
  io::write_u64(out, data_->seed.past_stream);
  io::write_u64(out, data_->seed.future_stream);
  io::write_f64s(out, data_->increments);
}

WienerPath WienerPath::load(std::istream& in) {
  io::read_header(in, io::RecordKind::wiener_path);
  auto storage = std::make_shared<Storage>();
  storage->h = io::read_f64(in);
  storage->n_back = io::read_i64(in);
  storage->n_fwd = io::read_i64(in);
  const std::int64_t modes = io::read_i64(in);
  const std::int64_t anchor = io::read_i64(in);
  storage->seed.seed = io::read_u64(in);
  storage->seed.past_stream = io::read_u64(in);
  storage->seed.future_stream = io::read_u64(in);
  if (!(storage->h > 0.0) || storage->n_back < 0 || storage->n_fwd < 0 || modes < 1 || modes > (1 << 20) ||
      anchor < -storage->n_back || anchor > storage->n_fwd) {
    throw Error(ErrorCode::io_error, "corrupt wiener path header");
  }
  storage->modes = static_cast<int>(modes);
  storage->increments.resize(static_cast<std::size_t>((storage->n_back + storage->n_fwd) * modes));
  io::read_f64s(in, storage->increments);
  WienerPath out;
  out.data_ = std::move(storage);
  out.anchor_ = anchor;
  return out;
}

WienerPath sample_path(const CovarianceSpec& cov, double t_back, double t_fwd, double h, std::uint64_t seed) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::invalid_grid, "grid step must be positive");
  if (!(t_back >= 0.0) || !(t_fwd >= 0.0)) throw Error(ErrorCode::invalid_grid, "window bounds must be non-negative");
  const int modes = cov.mode_count();
  if (modes < 1) throw Error(ErrorCode::invalid_grid, "mode_count must be positive");
  const std::int64_t n_back = cells_for(t_back, h, "t_back");
  const std::int64_t n_fwd = cells_for(t_fwd, h, "t_fwd");
  if (n_back + n_fwd == 0) throw Error(ErrorCode::invalid_grid, "empty time window");

  auto storage = std::make_shared<WienerPath::Storage>();
  storage->h = h;
  storage->modes = modes;
  storage->n_back = n_back;
  storage->n_fwd = n_fwd;
  storage->seed = SeedRecord{seed, 0, 1};
  const auto m = static_cast<std::size_t>(modes);
  storage->increments.resize(static_cast<std::size_t>(n_back + n_fwd) * m);

  const double scale = std::sqrt(h);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto future = make_engine(seed, storage->seed.future_stream);
  for (std::int64_t c = 0; c < n_fwd; ++c) {
    const auto base = static_cast<std::size_t>(c + n_back) * m;
    for (std::size_t k = 0; k < m; ++k) storage->increments[base + k] = scale * normal(future);
  }
  normal.reset();
  auto past = make_engine(seed, storage->seed.past_stream);
  for (std::int64_t c = -1; c >= -n_back; --c) {
    const auto base = static_cast<std::size_t>(c + n_back) * m;
    for (std::size_t k = 0; k < m; ++k) storage->increments[base + k] = scale * normal(past);
  }

  WienerPath path;
  path.data_ = std::move(storage);
  return path;
}

WienerPath path_from_increments(double h, int modes, std::int64_t n_back, std::vector<double> increments) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_grid, "grid step must be positive");
  if (modes < 1 || n_back < 0) throw Error(ErrorCode::invalid_grid, "bad path shape");
  if (increments.empty() || increments.size() % static_cast<std::size_t>(modes) != 0) {
    throw Error(ErrorCode::invalid_grid, "increment count must be a positive multiple of the mode count");
  }
  const auto cells = static_cast<std::int64_t>(increments.size() / static_cast<std::size_t>(modes));
  if (n_back > cells) throw Error(ErrorCode::invalid_grid, "n_back exceeds the number of cells");
  auto storage = std::make_shared<WienerPath::Storage>();
  storage->h = h;
  storage->modes = modes;
  storage->n_back = n_back;
  storage->n_fwd = cells - n_back;
  storage->increments = std::move(increments);
  WienerPath path;
  path.data_ = std::move(storage);
  return path;
}

WienerPath zero_path(int modes, double t_back, double t_fwd, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::invalid_grid, "grid step must be positive");
  const std::int64_t n_back = cells_for(t_back, h, "t_back");
  const std::int64_t n_fwd = cells_for(t_fwd, h, "t_fwd");
  if (n_back + n_fwd == 0) throw Error(ErrorCode::invalid_grid, "empty time window");
  return path_from_increments(h, modes, n_back,
                              std::vector<double>(static_cast<std::size_t>((n_back + n_fwd) * modes), 0.0));
}

// ---------------------------------------------------------------------------

WeightedIntegral weighted_integral(const WienerPath& path, int mode, const ExponentialWeight& weight,
                                   double tail_tol) {
  if (mode < 0 || mode >= path.mode_count()) throw Error(ErrorCode::invalid_argument, "mode index out of range");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw Error(ErrorCode::invalid_argument, "tail_tol must lie in (0, 1)");
  if (!(weight.lower <= weight.upper)) throw Error(ErrorCode::invalid_argument, "empty weight interval");
  const double h = path.step();
  const double log_tol = std::log(tail_tol);
  WeightedIntegral result;

  std::int64_t first = 0;
  if (std::isinf(weight.lower)) {
    if (!(weight.rate > 0.0)) {
      throw Error(ErrorCode::tail_not_negligible, "weight does not decay towards -infinity");
    }
    // exp(rate * s) <= tail_tol for s <= log(tail_tol) / rate
    first = static_cast<std::int64_t>(std::floor(log_tol / (weight.rate * h)));
    result.truncation_bound = std::max(result.truncation_bound, std::exp(weight.rate * (first - 1) * h));
  } else {
    first = static_cast<std::int64_t>(std::ceil(weight.lower / h - 1e-9));
  }
  std::int64_t end = 0;
  if (std::isinf(weight.upper)) {
    if (!(weight.rate < 0.0)) {
      throw Error(ErrorCode::tail_not_negligible, "weight does not decay towards +infinity");
    }
    end = static_cast<std::int64_t>(std::ceil(log_tol / (weight.rate * h))) + 1;
    result.truncation_bound = std::max(result.truncation_bound, std::exp(weight.rate * end * h));
  } else {
    end = static_cast<std::int64_t>(std::ceil(weight.upper / h - 1e-9));
  }
  if (end < first) end = first;
  if (!path.contains_cells(first, end)) {
    throw Error(ErrorCode::out_of_window, "weighted integral needs cells outside the stored path");
  }
  double sum = 0.0;
  for (std::int64_t c = first; c < end; ++c) {
    sum += std::exp(weight.rate * static_cast<double>(c) * h) * path.increment(mode, c);
  }
  result.value = sum;
  result.first_cell = first;
  result.end_cell = end;
  return result;
}

}  // namespace rdskit
