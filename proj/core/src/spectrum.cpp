#include "rdskit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "rdskit/error.hpp"
#include "rdskit/linalg.hpp"
#include "rdskit/stationary.hpp"

namespace rdskit {

LyapunovReport lyapunov_qr(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                           const LyapunovOptions& options) {
  if (!model.nonlinearity().differentiable()) throw Error(ErrorCode::unsupported, "nonlinearity has no derivative");
  const int n = model.dim();
  const int q = options.count == 0 ? n : options.count;
  if (q < 1 || q > n) throw Error(ErrorCode::invalid_argument, "tangent vector count must lie in [1, N]");
  if (options.reorth_every < 1) throw Error(ErrorCode::invalid_argument, "reorth_every must be positive");
  if (options.batches < 10) throw Error(ErrorCode::invalid_argument, "standard errors need at least 10 batches");
  const std::int64_t steps = model.steps_for(options.horizon);
  if (steps % options.reorth_every != 0) {
    throw Error(ErrorCode::grid_misaligned, "horizon is not a multiple of the re-orthonormalization interval");
  }
  const std::int64_t blocks = steps / options.reorth_every;
  if (blocks < options.batches) {
    throw Error(ErrorCode::invalid_argument, "fewer QR blocks than batches; lengthen the horizon");
  }

  Eigen::MatrixXd frame = options.initial_frame.value_or(Eigen::MatrixXd::Identity(n, q));
  if (frame.rows() != n || frame.cols() != q) throw Error(ErrorCode::invalid_argument, "initial frame has the wrong shape");
  {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
    frame = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
  }

  StationaryTrack track(model, y, path, options.start_shift, options.start_shift + steps);
  const auto qs = static_cast<std::size_t>(q);
  std::vector<double> total(qs, 0.0);
  std::vector<std::vector<double>> batch(static_cast<std::size_t>(options.batches), std::vector<double>(qs, 0.0));
  std::vector<double> batch_time(static_cast<std::size_t>(options.batches), 0.0);

  LyapunovReport rep;
  const std::int64_t stride = std::max<std::int64_t>(1, blocks / std::max(1, options.max_series_points));
  const double block_time = static_cast<double>(options.reorth_every) * model.h();
  for (std::int64_t b = 0; b < blocks; ++b) {
    for (int s = 0; s < options.reorth_every; ++s) track.advance(&frame);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
    Eigen::MatrixXd qm = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
    const auto bi = static_cast<std::size_t>(b * options.batches / blocks);
    for (int j = 0; j < q; ++j) {
      const double rjj = r(j, j);
      if (!std::isfinite(rjj) || std::abs(rjj) < 1e-300) {
        throw Error(ErrorCode::degenerate_r, "QR diagonal entry " + std::to_string(j) + " underflowed at block " +
                                                 std::to_string(b));
      }
      const double l = std::log(std::abs(rjj));
      total[static_cast<std::size_t>(j)] += l;
      batch[bi][static_cast<std::size_t>(j)] += l;
      if (rjj < 0.0) qm.col(j) = -qm.col(j);
    }
    batch_time[bi] += block_time;
    frame = std::move(qm);
    if ((b + 1) % stride == 0 || b + 1 == blocks) {
      const double t = static_cast<double>(b + 1) * block_time;
      rep.series_times.push_back(t);
      std::vector<double> row(qs);
      for (std::size_t j = 0; j < qs; ++j) row[j] = total[j] / t;
      rep.series.push_back(std::move(row));
    }
  }

  const double horizon = static_cast<double>(steps) * model.h();
  std::vector<double> lambda(qs);
  std::vector<double> se(qs);
  const auto nb = static_cast<double>(options.batches);
  for (std::size_t j = 0; j < qs; ++j) {
    lambda[j] = total[j] / horizon;
    double mean = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) mean += batch[i][j] / batch_time[i];
    mean /= nb;
    double var = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double d = batch[i][j] / batch_time[i] - mean;
      var += d * d;
    }
    se[j] = std::sqrt(var / (nb - 1.0) / nb);
  }
  std::vector<std::size_t> order(qs);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambda[a] > lambda[b]; });
  for (std::size_t j : order) {
    rep.exponents.push_back(lambda[j]);
    rep.std_errors.push_back(se[j]);
  }
  rep.multiplicities = group_multiplicities(rep.exponents, rep.std_errors, options.merge_floor);
  rep.gap = hyperbolicity_gap(rep.exponents, rep.std_errors, options.zero_band);
  rep.horizon = horizon;
  rep.reorth_every = options.reorth_every;
  rep.h = model.h();
  rep.batches = options.batches;
  return rep;
}

std::vector<int> group_multiplicities(const std::vector<double>& exponents, const std::vector<double>& std_errors,
                                      double floor) {
  std::vector<int> groups;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (i > 0) {
      const double se_a = i - 1 < std_errors.size() ? std_errors[i - 1] : 0.0;
      const double se_b = i < std_errors.size() ? std_errors[i] : 0.0;
      const double band = std::max(3.0 * std::hypot(se_a, se_b), floor);
      if (std::abs(exponents[i - 1] - exponents[i]) <= band) {
        ++groups.back();
        continue;
      }
    }
    groups.push_back(1);
  }
  return groups;
}

GapInfo hyperbolicity_gap(const std::vector<double>& exponents, const std::vector<double>& std_errors,
                          double zero_band) {
  GapInfo gap;
  const int count = static_cast<int>(exponents.size());
  for (int i = 0; i < count; ++i) {
    const double se = static_cast<std::size_t>(i) < std_errors.size() ? std_errors[static_cast<std::size_t>(i)] : 0.0;
    if (std::abs(exponents[static_cast<std::size_t>(i)]) <= zero_band + 3.0 * se) {
      gap.offending = i;
      gap.hyperbolic = false;
      return gap;
    }
  }
  int positive = 0;
  for (double l : exponents) positive += l > 0.0 ? 1 : 0;
  gap.hyperbolic = true;
  gap.unstable_dim = positive;
  gap.i0 = positive + 1;
  if (positive < count) gap.lambda_i0 = exponents[static_cast<std::size_t>(positive)];
  if (positive > 0) gap.lambda_i0_minus_1 = exponents[static_cast<std::size_t>(positive - 1)];
  return gap;
}

Eigen::MatrixXd scaled_linearization(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                     std::int64_t start, std::int64_t steps) {
  const int n = model.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  StationaryTrack track(model, y, path, start, start + steps);
  for (std::int64_t k = 0; k < steps; ++k) {
    track.advance(&m);
    const double norm = m.norm();
    if (!std::isfinite(norm) || norm == 0.0) {
      throw Error(ErrorCode::degenerate_r, "linearized cocycle lost all precision");
    }
    if (norm > 1e100 || norm < 1e-100) m /= norm;
  }
  return m;
}

void canonicalize_orientation(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index i = 0;
    basis.col(j).cwiseAbs().maxCoeff(&i);
    if (basis(i, j) < 0.0) basis.col(j) = -basis.col(j);
  }
}

Splitting split_subspaces(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                          const SplitOptions& options) {
  const int n = model.dim();
  const int du = options.unstable_dim;
  if (du < 0 || du > n) throw Error(ErrorCode::invalid_argument, "unstable dimension out of range");
  if (!(options.initial_horizon > 0.0) || !(options.max_horizon >= options.initial_horizon)) {
    throw Error(ErrorCode::invalid_argument, "bad horizon range for the splitting");
  }
  Splitting split;
  split.at_shift = path.anchor_steps();
  if (du == 0 || du == n) {
    split.unstable_basis = du == 0 ? Eigen::MatrixXd(n, 0) : Eigen::MatrixXd::Identity(n, n);
    split.stable_basis = du == 0 ? Eigen::MatrixXd::Identity(n, n) : Eigen::MatrixXd(n, 0);
    split.min_angle = min_principal_angle(split.unstable_basis, split.stable_basis);
    return split;
  }

  auto converge = [&](auto&& estimate, std::vector<SubspaceConvergence>& history, const char* what) {
    double t = options.initial_horizon;
    Eigen::MatrixXd prev = estimate(t);
    while (true) {
      t *= 2.0;
      if (t > options.max_horizon * (1.0 + 1e-12)) {
        throw Error(ErrorCode::no_subspace_convergence,
                    std::string(what) + " subspace estimates did not settle by the maximal horizon");
      }
      Eigen::MatrixXd next = estimate(t);
      const double angle = subspace_distance(prev, next);
      history.push_back({t, angle});
      prev = std::move(next);
      if (angle < options.tol) return prev;
    }
  };

  auto unstable_at = [&](double t) -> Eigen::MatrixXd {
    const std::int64_t k = model.steps_for(t);
    const Eigen::MatrixXd m = scaled_linearization(model, y, path, -k, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(du);
  };
  auto stable_at = [&](double t) -> Eigen::MatrixXd {
    const std::int64_t k = model.steps_for(t);
    const Eigen::MatrixXd m = scaled_linearization(model, y, path, 0, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(n - du);
  };
  split.unstable_basis = options.want_unstable ? converge(unstable_at, split.unstable_history, "unstable")
                                               : Eigen::MatrixXd(n, 0);
  split.stable_basis = options.want_stable ? converge(stable_at, split.stable_history, "stable")
                                           : Eigen::MatrixXd(n, 0);
  canonicalize_orientation(split.unstable_basis);
  canonicalize_orientation(split.stable_basis);
  split.min_angle = min_principal_angle(split.unstable_basis, split.stable_basis);
  return split;
}

DichotomyReport dichotomy_check(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                const Splitting& split, const DichotomyOptions& options) {
  const int n = model.dim();
  if (split.dim() != n) throw Error(ErrorCode::invalid_argument, "splitting does not match the model dimension");
  DichotomyReport rep;

  auto add_basis = [&](const Eigen::MatrixXd& basis, Subspace side) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) rep.samples.push_back({side, basis.col(j), 0.0, true});
  };
  add_basis(split.unstable_basis, Subspace::minus);
  add_basis(split.stable_basis, Subspace::plus);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  for (int s = 0; s < options.random_samples; ++s) {
    for (const auto* basis : {&split.unstable_basis, &split.stable_basis}) {
      if (basis->cols() == 0) continue;
      Eigen::VectorXd c(basis->cols());
      for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = normal(rng);
      const Eigen::VectorXd x = (*basis) * c;
      rep.samples.push_back({basis == &split.unstable_basis ? Subspace::minus : Subspace::plus, x.normalized(), 0.0, true});
    }
  }
  for (const auto& x : options.extra) {
    if (x.size() != n || x.norm() == 0.0) {
      ++rep.filtered;
      continue;
    }
    if (relative_distance_to_span(split.unstable_basis, x) <= options.membership_tol) {
      rep.samples.push_back({Subspace::minus, x.normalized(), 0.0, true});
    } else if (relative_distance_to_span(split.stable_basis, x) <= options.membership_tol) {
      rep.samples.push_back({Subspace::plus, x.normalized(), 0.0, true});
    } else {
      ++rep.filtered;
    }
  }
  if (rep.samples.empty()) return rep;

  const std::int64_t steps = model.steps_for(options.horizon);
  const auto count = static_cast<Eigen::Index>(rep.samples.size());
  Eigen::MatrixXd v(n, count);
  for (Eigen::Index j = 0; j < count; ++j) v.col(j) = rep.samples[static_cast<std::size_t>(j)].x;
  std::vector<double> log_norm(rep.samples.size(), 0.0);
  std::vector<std::int64_t> last_violation(rep.samples.size(), -1);

  StationaryTrack track(model, y, path, 0, steps);
  const double slack = 1e-12;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * model.h();
    for (std::size_t j = 0; j < rep.samples.size(); ++j) {
      const bool ok = rep.samples[j].side == Subspace::minus ? log_norm[j] >= options.delta1 * t - slack
                                                             : log_norm[j] <= -options.delta2 * t + slack;
      if (!ok) last_violation[j] = k;
    }
    if (k == steps) break;
    track.advance(&v);
    for (Eigen::Index j = 0; j < count; ++j) {
      const double norm = v.col(j).norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        log_norm[static_cast<std::size_t>(j)] = norm > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        v.col(j).setZero();
        continue;
      }
      log_norm[static_cast<std::size_t>(j)] += std::log(norm);
      v.col(j) /= norm;
    }
  }
  for (std::size_t j = 0; j < rep.samples.size(); ++j) {
    auto& s = rep.samples[j];
    s.tau = last_violation[j] < 0 ? 0.0 : static_cast<double>(last_violation[j] + 1) * model.h();
    s.finite = s.tau <= options.finite_fraction * options.horizon;
    if (!s.finite) ++rep.violations;
    double& worst = s.side == Subspace::minus ? rep.max_tau_unstable : rep.max_tau_stable;
    worst = std::max(worst, s.tau);
  }
  return rep;
}

}  // namespace rdskit
