#include "rdskit/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rdskit/error.hpp"

namespace rdskit {
namespace {

void require_splitting(const OperatorSpec& op) {
  if (!op.has_splitting()) throw Error(ErrorCode::splitting_undefined, "operator has a zero eigenvalue");
}

double min_rate(const OperatorSpec& op) {
  require_splitting(op);
  double gamma = std::numeric_limits<double>::infinity();
  for (double mu : op.eigenvalues()) gamma = std::min(gamma, std::abs(mu));
  return gamma;
}

std::int64_t tail_steps(const SemiflowModel& model, double tail_tol) {
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw Error(ErrorCode::invalid_argument, "tail_tol must lie in (0, 1)");
  return static_cast<std::int64_t>(std::ceil(tail_time(model.op(), tail_tol) / model.h()));
}

// (B0 dW)_n for one cell, scaled by the stepper's noise gain.
Eigen::VectorXd forcing(const SemiflowModel& model, const WienerPath& path, std::int64_t cell) {
  if (model.coupling() != NoiseCoupling::additive) return Eigen::VectorXd::Zero(model.dim());
  const auto dw = path.cell(cell);
  return model.additive_coupling() *
         Eigen::Map<const Eigen::VectorXd>(dw.data(), static_cast<Eigen::Index>(dw.size()));
}

}  // namespace

ShiftWindow ShiftWindow::symmetric(const SemiflowModel& model, double half_width) {
  if (!(half_width >= 0.0)) throw Error(ErrorCode::invalid_argument, "window half-width must be non-negative");
  const std::int64_t k = model.steps_for(half_width);
  return {-k, k};
}

ShiftWindow ShiftWindow::between(const SemiflowModel& model, double t_lo, double t_hi) {
  if (!(t_lo <= t_hi)) throw Error(ErrorCode::invalid_argument, "empty shift window");
  auto index = [&](double t) {
    const std::int64_t k = model.steps_for(std::abs(t));
    return t < 0.0 ? -k : k;
  };
  return {index(t_lo), index(t_hi)};
}

double tail_time(const OperatorSpec& op, double tail_tol) {
  return std::log(1.0 / tail_tol) / min_rate(op);
}

std::pair<std::int64_t, std::int64_t> fixed_point_cells(const SemiflowModel& model, const ShiftWindow& window,
                                                        double tail_tol) {
  const std::int64_t k = tail_steps(model, tail_tol);
  return {window.first - k - 1, window.last + k + 2};
}

double contraction_constant(const OperatorSpec& op, double lipschitz) {
  require_splitting(op);
  double sum = 0.0;
  if (op.minus_dim() < op.dim()) sum += 1.0 / op.smallest_positive();
  if (op.minus_dim() > 0) sum -= 1.0 / op.largest_negative();
  return lipschitz * sum;
}

ConvolutionResult stochastic_convolution(const SemiflowModel& model, const WienerPath& path,
                                         const ShiftWindow& window, double tail_tol) {
  const OperatorSpec& op = model.op();
  require_splitting(op);
  if (model.coupling() == NoiseCoupling::diagonal_multiplicative) {
    throw Error(ErrorCode::unsupported, "stochastic convolution needs additive noise");
  }
  if (window.last < window.first) throw Error(ErrorCode::invalid_argument, "empty shift window");
  const int n = model.dim();
  ConvolutionResult result;
  result.values.assign(static_cast<std::size_t>(window.size()), Eigen::VectorXd::Zero(n));
  if (model.coupling() == NoiseCoupling::none) return result;
  model.check_path(path);

  const Eigen::MatrixXd b0 = model.covariance().coupling(n);
  // kappa_n = G_n e^{mu_n h} turns the left-point sum into the scheme's own orbit.
  Eigen::ArrayXd kappa(n);
  for (int i = 0; i < n; ++i) kappa[i] = model.noise_gain()[i] * std::exp(op.eigenvalue(i) * model.h());

  double bound = 0.0;
  for (std::int64_t k = window.first; k <= window.last; ++k) {
    const WienerPath shifted = path.shifted_steps(k);
    Eigen::VectorXd& y = result.values[static_cast<std::size_t>(k - window.first)];
    for (int i = 0; i < n; ++i) {
      const double mu = op.eigenvalue(i);
      const ExponentialWeight w = mu > 0.0
                                      ? ExponentialWeight{mu, -std::numeric_limits<double>::infinity(), 0.0}
                                      : ExponentialWeight{mu, 0.0, std::numeric_limits<double>::infinity()};
      const double sign = mu > 0.0 ? 1.0 : -1.0;
      for (Eigen::Index j = 0; j < b0.cols(); ++j) {
        if (b0(i, j) == 0.0) continue;
        const WeightedIntegral wi = weighted_integral(shifted, static_cast<int>(j), w, tail_tol);
        y[i] += sign * kappa[i] * b0(i, j) * wi.value;
        bound = std::max(bound, wi.truncation_bound);
      }
    }
  }
  result.truncation_bound = bound * b0.norm();
  return result;
}

StationaryPoint solve_fixed_point(const SemiflowModel& model, const WienerPath& path, const ShiftWindow& window,
                                  const FixedPointOptions& options) {
  const OperatorSpec& op = model.op();
  require_splitting(op);
  if (model.coupling() == NoiseCoupling::diagonal_multiplicative) {
    throw Error(ErrorCode::unsupported, "the contraction construction needs additive noise");
  }
  const NonlinearitySpec& f = model.nonlinearity();
  if (!f.globally_bounded()) {
    throw Error(ErrorCode::condition_violated, "contraction construction needs F bounded with finite Lipschitz constant");
  }
  const double cmu = contraction_constant(op, f.lipschitz);
  if (!(cmu < 1.0)) {
    throw Error(ErrorCode::condition_violated, "contraction constant " + std::to_string(cmu) + " is not below 1");
  }
  if (window.last < window.first) throw Error(ErrorCode::invalid_argument, "empty shift window");
  if (!(options.tol > 0.0) || options.max_iter < 1) {
    throw Error(ErrorCode::invalid_argument, "tolerance and iteration budget must be positive");
  }
  const std::int64_t k_tail = tail_steps(model, options.tail_tol);
  if (k_tail < 8) {
    throw Error(ErrorCode::quadrature_too_coarse, "grid step too coarse to resolve the exponential tails");
  }
  model.check_path(path);
  const auto [cell_lo, cell_hi] = fixed_point_cells(model, window, options.tail_tol);
  if (!path.contains_cells(cell_lo, cell_hi)) {
    throw Error(ErrorCode::out_of_window, "noise path must cover the window plus the tail time on both sides");
  }

  const int n = model.dim();
  const int m = op.minus_dim();
  const std::int64_t k_left = window.first - k_tail;
  const std::int64_t k_right = window.last + k_tail;
  const auto count = static_cast<std::size_t>(k_right - k_left + 1);
  auto at = [&](std::int64_t k) { return static_cast<std::size_t>(k - k_left); };

  const Eigen::ArrayXd& decay = model.decay();
  const Eigen::ArrayXd& phi = model.phi();
  Eigen::ArrayXd grow(n);  // e^{mu h}, used backwards on the unstable block
  Eigen::ArrayXd psi(n);   // e^{mu h} phi
  for (int i = 0; i < n; ++i) {
    grow[i] = 1.0 / decay[i];
    psi[i] = grow[i] * phi[i];
  }

  // Y1 on the extended grid; stable block from the left edge, unstable from the right.
  std::vector<Eigen::VectorXd> y1(count, Eigen::VectorXd::Zero(n));
  if (model.coupling() == NoiseCoupling::additive) {
    for (std::int64_t k = k_left; k < k_right; ++k) {
      const Eigen::VectorXd b = forcing(model, path, k);
      const Eigen::VectorXd& cur = y1[at(k)];
      Eigen::VectorXd& next = y1[at(k + 1)];
      for (int i = m; i < n; ++i) next[i] = decay[i] * cur[i] + b[i];
    }
    for (std::int64_t k = k_right - 1; k >= k_left; --k) {
      const Eigen::VectorXd b = forcing(model, path, k);
      const Eigen::VectorXd& next = y1[at(k + 1)];
      Eigen::VectorXd& cur = y1[at(k)];
      for (int i = 0; i < m; ++i) cur[i] = grow[i] * (next[i] - b[i]);
    }
  }

  std::vector<Eigen::VectorXd> z(count, Eigen::VectorXd::Zero(n));
  if (options.initial) {
    for (std::int64_t k = k_left; k <= k_right; ++k) {
      Eigen::VectorXd z0 = options.initial(k);
      if (z0.size() != n) throw Error(ErrorCode::invalid_argument, "initial field has the wrong dimension");
      z[at(k)] = std::move(z0);
    }
  }

  const NonlinearityEvaluator& eval = model.evaluator();
  std::vector<Eigen::VectorXd> fz(count);
  std::vector<Eigen::VectorXd> znew(count, Eigen::VectorXd::Zero(n));
  std::vector<double> distances;
  int iterations = 0;
  bool converged = false;
  while (iterations < options.max_iter) {
    for (std::size_t k = 0; k < count; ++k) {
      if (eval.is_zero()) {
        fz[k] = Eigen::VectorXd::Zero(n);
      } else {
        eval.eval(z[k] + y1[k], fz[k]);
      }
    }
    znew.front().tail(n - m).setZero();
    for (std::size_t k = 0; k + 1 < count; ++k) {
      for (int i = m; i < n; ++i) znew[k + 1][i] = decay[i] * znew[k][i] + phi[i] * fz[k][i];
    }
    znew.back().head(m).setZero();
    for (std::size_t k = count - 1; k-- > 0;) {
      for (int i = 0; i < m; ++i) znew[k][i] = grow[i] * znew[k + 1][i] - psi[i] * fz[k][i];
    }
    double d = 0.0;
    for (std::size_t k = 0; k < count; ++k) d = std::max(d, (znew[k] - z[k]).norm());
    distances.push_back(d);
    std::swap(z, znew);
    ++iterations;
    if (!std::isfinite(d)) break;
    if (d < options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::no_convergence, "fixed-point iteration stalled after " + std::to_string(iterations) +
                                               " iterations (last distance " +
                                               std::to_string(distances.empty() ? 0.0 : distances.back()) + ")");
  }

  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::VectorXd> conv;
  values.reserve(static_cast<std::size_t>(window.size()));
  conv.reserve(static_cast<std::size_t>(window.size()));
  for (std::int64_t k = window.first; k <= window.last; ++k) {
    values.push_back(z[at(k)] + y1[at(k)]);
    conv.push_back(y1[at(k)]);
  }
  StationaryPoint y(model.h(), op.basis_id(), path.seed(), path.anchor_steps(), window.first, std::move(values));
  y.set_convolution_part(std::move(conv));
  StationaryReport& rep = y.report();
  rep.method = StationaryMethod::contraction;
  rep.condition_mu = cmu;
  rep.iterations = iterations;
  rep.iterate_distances = std::move(distances);
  const double weight = std::exp(-min_rate(op) * static_cast<double>(k_tail) * model.h());
  rep.drift_tail_bound = weight;
  rep.noise_tail_bound = model.coupling() == NoiseCoupling::additive ? weight * model.covariance().coupling(n).norm() : 0.0;
  return y;
}

StationaryPoint pullback_estimate(const SemiflowModel& model, const WienerPath& path, const ShiftWindow& window,
                                  const PullbackOptions& options) {
  if (window.last < window.first) throw Error(ErrorCode::invalid_argument, "empty shift window");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "synchronization tolerance must be positive");
  model.check_path(path);
  const int n = model.dim();
  const std::int64_t k_pull = model.steps_for(options.pullback_time);
  const std::int64_t start = window.first - k_pull;
  if (!path.contains_cells(start, window.last)) {
    throw Error(ErrorCode::out_of_window, "noise path must cover the pullback interval");
  }
  Eigen::VectorXd ua = options.x0_a.value_or(Eigen::VectorXd::Zero(n));
  Eigen::VectorXd ub = options.x0_b.value_or(Eigen::VectorXd::Ones(n));
  if (ua.size() != n || ub.size() != n) throw Error(ErrorCode::invalid_argument, "initial states have the wrong size");
  if ((ua - ub).norm() == 0.0) throw Error(ErrorCode::invalid_argument, "pullback needs two distinct initial states");

  std::vector<double> times;
  std::vector<double> gaps;
  std::vector<Eigen::VectorXd> values;
  times.reserve(static_cast<std::size_t>(window.last - start + 1));
  gaps.reserve(times.capacity());
  values.reserve(static_cast<std::size_t>(window.size()));
  double window_gap = 0.0;
  for (std::int64_t k = start;; ++k) {
    const double gap = (ua - ub).norm();
    times.push_back(static_cast<double>(k - start) * model.h());
    gaps.push_back(gap);
    if (k >= window.first) {
      values.push_back(ua);
      window_gap = std::max(window_gap, gap);
    }
    if (k == window.last) break;
    model.step(ua, path.cell(k));
    model.step(ub, path.cell(k));
  }
  if (!(window_gap < options.tol)) {
    throw Error(ErrorCode::no_convergence, "pullback runs did not synchronize: gap " + std::to_string(window_gap) +
                                               " on the window exceeds " + std::to_string(options.tol));
  }
  StationaryPoint y(model.h(), model.op().basis_id(), path.seed(), path.anchor_steps(), window.first,
                    std::move(values));
  StationaryReport& rep = y.report();
  rep.method = StationaryMethod::pullback;
  rep.sync_times = std::move(times);
  rep.sync_gap = std::move(gaps);
  return y;
}

StationaryPoint equilibrium_point(const SemiflowModel& model, const EquilibriumOptions& options) {
  if (model.coupling() == NoiseCoupling::additive) {
    throw Error(ErrorCode::unsupported, "a deterministic equilibrium is not stationary under additive noise");
  }
  if (!model.nonlinearity().differentiable()) {
    throw Error(ErrorCode::unsupported, "Newton's method needs the derivative of F");
  }
  const OperatorSpec& op = model.op();
  const int n = model.dim();
  const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(op.eigenvalues().data(), n);
  const NonlinearityEvaluator& eval = model.evaluator();
  Eigen::VectorXd u = options.initial.value_or(Eigen::VectorXd::Zero(n));
  if (u.size() != n) throw Error(ErrorCode::invalid_argument, "initial guess has the wrong size");

  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = -mu.cwiseProduct(x);
    if (!eval.is_zero()) g += eval.eval(x);
    return g;
  };
  Eigen::VectorXd g = residual(u);
  int it = 0;
  while (g.norm() > options.tol) {
    if (it == options.max_iter) {
      throw Error(ErrorCode::no_convergence, "Newton iteration for the equilibrium did not converge");
    }
    Eigen::MatrixXd jac = -Eigen::MatrixXd(mu.asDiagonal());
    if (!eval.is_zero()) jac += eval.jacobian(u);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) throw Error(ErrorCode::no_convergence, "singular Jacobian in the equilibrium search");
    u -= lu.solve(g);
    g = residual(u);
    ++it;
    if (!g.allFinite()) throw Error(ErrorCode::no_convergence, "Newton iteration diverged");
  }
  if (model.coupling() == NoiseCoupling::diagonal_multiplicative) {
    for (int i = 0; i < n; ++i) {
      if (model.sigma()[i] != 0.0 && std::abs(u[i]) > 1e-12) {
        throw Error(ErrorCode::unsupported, "equilibrium does not vanish on the noisy modes");
      }
    }
  }
  StationaryPoint y = StationaryPoint::constant(op.vec(u), model.h());
  y.report().method = StationaryMethod::equilibrium;
  y.report().iterations = it;
  y.report().stationarity_residual = g.norm();
  return y;
}

StationaryTrack::StationaryTrack(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                 std::int64_t start, std::int64_t end)
    : model_(&model), y_(&y), path_(&path), k_(start), end_(end) {
  if (end < start) throw Error(ErrorCode::invalid_argument, "empty trajectory span");
  model.check_path(path);
  if (!path.contains_cells(start, end)) {
    throw Error(ErrorCode::out_of_window, "noise path does not cover the trajectory span");
  }
  if (!y.covers(path, start, start)) {
    throw Error(ErrorCode::window_exceeded, "stationary window does not contain the start of the span");
  }
  lookup_ = y.covers(path, start, end);
  u_ = y.coords_at(path, start);
}

void StationaryTrack::advance(Eigen::MatrixXd* tangent) {
  if (k_ >= end_) throw Error(ErrorCode::window_exceeded, "trajectory span exhausted");
  if (lookup_) {
    if (tangent != nullptr) {
      Eigen::VectorXd scratch = u_;
      model_->step(scratch, path_->cell(k_), tangent);
    }
    ++k_;
    u_ = y_->coords_at(*path_, k_);
  } else {
    model_->step(u_, path_->cell(k_), tangent);
    ++k_;
  }
}

double stationarity_residual(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                             double horizon) {
  const std::int64_t steps = model.steps_for(horizon);
  if (!y.covers(path, 0, steps)) {
    throw Error(ErrorCode::window_exceeded, "horizon runs past the stationary window");
  }
  model.check_path(path);
  if (!path.contains_cells(0, steps)) throw Error(ErrorCode::out_of_window, "noise path does not cover the horizon");
  Eigen::VectorXd u = y.coords_at(path, 0);
  double worst = 0.0;
  for (std::int64_t j = 0; j < steps; ++j) {
    model.step(u, path.cell(j));
    const Eigen::VectorXd& target = y.coords_at(path, j + 1);
    worst = std::max(worst, (u - target).norm() / (1.0 + target.norm()));
  }
  return worst;
}

}  // namespace rdskit
