#include "rdskit/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rdskit/error.hpp"
#include "rdskit/parallel.hpp"
#include "rdskit/stationary.hpp"

namespace rdskit {
namespace {

std::int64_t steps_per_unit(const SemiflowModel& model) { return model.steps_for(1.0); }

// log |DU(steps) v| along the stationary trajectory, |v| = 1.
double log_growth(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path, std::int64_t start,
                  std::int64_t steps, const Eigen::VectorXd& v) {
  Eigen::MatrixXd w = v.normalized();
  double log_norm = 0.0;
  StationaryTrack track(model, y, path, start, start + steps);
  for (std::int64_t k = 0; k < steps; ++k) {
    track.advance(&w);
    const double n = w.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::degenerate_r, "tangent vector collapsed");
    log_norm += std::log(n);
    w /= n;
  }
  return log_norm;
}

std::vector<double> prefix_logs(const std::vector<double>& d, double floor, std::size_t& count) {
  std::vector<double> out;
  for (double v : d) {
    if (!(v > floor) || !std::isfinite(v)) break;
    out.push_back(std::log(v));
  }
  count = out.size();
  return out;
}

}  // namespace

ManifoldParams ManifoldParams::from_gap(const GapInfo& gap) {
  ManifoldParams p;
  p.lambda_i0 = gap.lambda_i0;
  p.lambda_i0_minus_1 = gap.lambda_i0_minus_1;
  double scale = std::numeric_limits<double>::infinity();
  if (std::isfinite(gap.lambda_i0)) scale = std::min(scale, -gap.lambda_i0);
  if (std::isfinite(gap.lambda_i0_minus_1)) scale = std::min(scale, gap.lambda_i0_minus_1);
  if (!std::isfinite(scale)) scale = 1.0;
  p.rho1 = p.rho2 = std::min(0.1 * scale, 0.45);
  p.beta1 = p.beta2 = std::clamp(2.0 * p.rho1, std::nextafter(p.rho1, 1.0), 1.0);
  p.eps1 = std::isfinite(gap.lambda_i0) ? -gap.lambda_i0 / 2.0 : 0.0;
  p.eps2 = std::isfinite(gap.lambda_i0_minus_1) ? gap.lambda_i0_minus_1 / 2.0 : 0.0;
  return p;
}

void ManifoldParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, what); };
  if (!(rho1 > 0.0 && beta1 > rho1 && beta1 <= 1.0)) fail("need 0 < rho1 < beta1 <= 1");
  if (!(rho2 > 0.0 && beta2 > rho2 && beta2 <= 1.0)) fail("need 0 < rho2 < beta2 <= 1");
  if (std::isfinite(lambda_i0) && !(eps1 > 0.0 && eps1 < -lambda_i0)) fail("eps1 must lie in (0, -lambda_i0)");
  if (std::isfinite(lambda_i0_minus_1) && !(eps2 > 0.0 && eps2 < lambda_i0_minus_1)) {
    fail("eps2 must lie in (0, lambda_{i0-1})");
  }
  if (n_max < 1) fail("n_max must be positive");
  if (!(t_back > 0.0)) fail("t_back must be positive");
  if (chain_depth < 1) fail("chain_depth must be positive");
  if (samples_per_unit < 1) fail("samples_per_unit must be positive");
  if (!(noise_floor > 0.0)) fail("noise_floor must be positive");
  if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0)) fail("boundary_fraction must lie in (0, 1)");
}

const char* to_string(StableVerdict v) {
  switch (v) {
    case StableVerdict::in: return "in";
    case StableVerdict::out: return "out";
    case StableVerdict::boundary: return "boundary";
  }
  return "unknown";
}

StableEvidence classify_stable(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                               const Eigen::VectorXd& x, const ManifoldParams& params) {
  params.validate();
  if (!std::isfinite(params.lambda_i0)) {
    throw Error(ErrorCode::invalid_argument, "stable classification needs a finite lambda_i0");
  }
  if (x.size() != model.dim()) throw Error(ErrorCode::invalid_argument, "point has the wrong dimension");
  const std::int64_t unit = steps_per_unit(model);
  const std::int64_t total = unit * params.n_max;
  const std::int64_t fine = std::max<std::int64_t>(1, unit / params.samples_per_unit);

  StableEvidence ev;
  Eigen::VectorXd u = x;
  double d = (u - y.coords_at(path, 0)).norm();
  ev.integer_distances.push_back(d);
  ev.times.push_back(0.0);
  ev.distances.push_back(d);
  if (d > params.rho1) {
    ev.first_failure = 0;
    ev.verdict = StableVerdict::out;
    return ev;
  }
  model.check_path(path);
  if (!path.contains_cells(0, total)) throw Error(ErrorCode::out_of_window, "noise path does not cover n_max");
  for (std::int64_t k = 1; k <= total; ++k) {
    model.step(u, path.cell(k - 1));
    d = (u - y.coords_at(path, k)).norm();
    if (k % fine == 0) {
      ev.times.push_back(static_cast<double>(k) * model.h());
      ev.distances.push_back(d);
    }
    if (k % unit == 0) {
      const auto n = static_cast<int>(k / unit);
      ev.integer_distances.push_back(d);
      if (ev.first_failure < 0 && d > params.beta1 * std::exp(params.stable_rate() * n)) ev.first_failure = n;
    }
  }
  if (ev.first_failure < 0) {
    ev.verdict = StableVerdict::in;
  } else if (ev.first_failure > params.boundary_fraction * params.n_max) {
    ev.verdict = StableVerdict::boundary;
  } else {
    ev.verdict = StableVerdict::out;
  }
  return ev;
}

LineFit stable_decay_rate(const std::vector<double>& times, const std::vector<double>& distances, double noise_floor) {
  if (times.size() != distances.size()) throw Error(ErrorCode::invalid_argument, "series lengths differ");
  std::size_t count = 0;
  const std::vector<double> logs = prefix_logs(distances, noise_floor, count);
  if (count < 10) {
    throw Error(ErrorCode::series_too_short,
                "only " + std::to_string(count) + " points above the noise floor (need 10)");
  }
  return fit_line(std::span<const double>(times.data(), count), logs);
}

LipschitzEstimate stable_lipschitz_exponent(const SemiflowModel& model, const WienerPath& path,
                                            const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
                                            double horizon, const ManifoldParams& params) {
  if (pairs.size() < 5) throw Error(ErrorCode::degenerate_pairs, "need at least 5 pairs");
  double min_dist = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : pairs) {
    if (a.size() != model.dim() || b.size() != model.dim()) {
      throw Error(ErrorCode::invalid_argument, "pair point has the wrong dimension");
    }
    const double dist = (a - b).norm();
    if (!(dist > 1e-8)) throw Error(ErrorCode::degenerate_pairs, "pair points closer than 1e-8");
    min_dist = std::min(min_dist, dist);
  }
  const std::int64_t total = model.steps_for(horizon);
  const std::int64_t fine = std::max<std::int64_t>(1, steps_per_unit(model) / params.samples_per_unit);
  model.check_path(path);
  if (!path.contains_cells(0, total)) throw Error(ErrorCode::out_of_window, "noise path does not cover the horizon");

  std::vector<Eigen::VectorXd> ua;
  std::vector<Eigen::VectorXd> ub;
  std::vector<double> d0;
  for (const auto& [a, b] : pairs) {
    ua.push_back(a);
    ub.push_back(b);
    d0.push_back((a - b).norm());
  }
  LipschitzEstimate est;
  auto record = [&](std::int64_t k) {
    double sup = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) sup = std::max(sup, (ua[i] - ub[i]).norm() / d0[i]);
    est.times.push_back(static_cast<double>(k) * model.h());
    est.sup_ratio.push_back(sup);
  };
  record(0);
  for (std::int64_t k = 1; k <= total; ++k) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      model.step(ua[i], path.cell(k - 1));
      model.step(ub[i], path.cell(k - 1));
    }
    if (k % fine == 0) record(k);
  }
  std::size_t count = 0;
  const std::vector<double> logs = prefix_logs(est.sup_ratio, params.noise_floor / min_dist, count);
  if (count < 10) throw Error(ErrorCode::series_too_short, "ratio series drops below the noise floor too early");
  est.fit = fit_line(std::span<const double>(est.times.data(), count), logs);
  return est;
}

std::vector<Eigen::VectorXd> spread_coordinates(int dim, int count, double rho, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  if (dim < 1 || count < 1) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int inner = (count + 1) / 2;
  const int outer = count - inner;
  for (int i = 0; i < count; ++i) {
    const double r = i < inner ? 0.95 * rho / 4.0 * (i + 1) / inner
                               : rho / 4.0 + (0.9 * rho - rho / 4.0) * (i - inner + 1) / std::max(1, outer);
    Eigen::VectorXd dir(dim);
    if (dim == 1) {
      dir[0] = i % 2 == 0 ? 1.0 : -1.0;
    } else {
      for (int j = 0; j < dim; ++j) dir[j] = normal(rng);
      dir.normalize();
    }
    out.push_back(r * dir);
  }
  return out;
}

std::vector<Eigen::VectorXd> sample_stable(const SemiflowModel& model, const StationaryPoint& y,
                                           const WienerPath& path, const Splitting& split,
                                           const std::vector<Eigen::VectorXd>& tangent_coords,
                                           const ManifoldParams& params) {
  const Eigen::MatrixXd& s = split.stable_basis;
  const Eigen::MatrixXd& u = split.unstable_basis;
  const Eigen::VectorXd y0 = y.coords_at(path, 0);
  std::vector<Eigen::VectorXd> out;
  if (u.cols() == 0) {
    for (const auto& a : tangent_coords) out.push_back(y0 + s * a);
    return out;
  }
  const std::int64_t k = model.steps_for(static_cast<double>(params.n_max));
  const Eigen::MatrixXd lin = scaled_linearization(model, y, path, 0, k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lin, Eigen::ComputeFullU);
  const Eigen::MatrixXd p = svd.matrixU().leftCols(u.cols());
  const Eigen::VectorXd yt = y.coords_at(path, k);

  for (const auto& a : tangent_coords) {
    if (a.size() != s.cols()) throw Error(ErrorCode::invalid_argument, "tangent coordinate has the wrong dimension");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(u.cols());
    bool converged = false;
    for (int it = 0; it < 60 && !converged; ++it) {
      const ModeVec x = model.op().vec(y0 + s * a + u * b);
      const auto [ut, jac] = tangent_eval_steps(model, k, x, path);
      const Eigen::VectorXd r = p.transpose() * (ut.coords() - yt);
      const Eigen::MatrixXd jr = p.transpose() * jac * u;
      const Eigen::VectorXd delta = jr.fullPivLu().solve(r);
      if (!delta.allFinite()) break;
      b -= delta;
      converged = delta.norm() <= 1e-15 * std::max(1.0, b.norm()) || r.norm() == 0.0;
    }
    if (!converged) throw Error(ErrorCode::no_convergence, "stable-manifold shooting did not converge");
    out.push_back(y0 + s * a + u * b);
  }
  return out;
}

std::vector<UnstableSample> build_unstable(const SemiflowModel& model, const StationaryPoint& y,
                                           const WienerPath& path, const Eigen::MatrixXd& unstable_basis_past,
                                           const ManifoldParams& params, int n_points, std::uint64_t seed) {
  params.validate();
  const Eigen::Index du = unstable_basis_past.cols();
  if (du == 0) throw Error(ErrorCode::no_unstable_directions, "unstable subspace is trivial");
  if (n_points < 1) throw Error(ErrorCode::invalid_argument, "need at least one unstable seed");
  const std::int64_t unit = steps_per_unit(model);
  const std::int64_t k_back = model.steps_for(params.t_back);
  const int available = static_cast<int>(k_back / unit);
  const int depth = std::min(params.chain_depth, available);
  const bool truncated = params.chain_depth > available;
  model.check_path(path);
  if (!path.contains_cells(-k_back, 0)) throw Error(ErrorCode::out_of_window, "noise path does not cover t_back");

  const Eigen::VectorXd base = y.coords_at(path, -k_back);
  std::vector<Eigen::VectorXd> targets(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n) targets[static_cast<std::size_t>(n)] = y.coords_at(path, -n * unit);

  std::vector<UnstableSample> out;
  for (const auto& c : spread_coordinates(static_cast<int>(du), n_points, params.rho2, seed)) {
    const Eigen::VectorXd dir = (unstable_basis_past * c).normalized();
    const double growth = std::exp(log_growth(model, y, path, -k_back, k_back, dir));
    double offset = c.norm() / growth;
    for (int shrink = 0; shrink <= params.max_shrink; ++shrink, offset *= 0.5) {
      std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(depth) + 1);
      Eigen::VectorXd state = base + offset * dir;
      bool ok = true;
      if (k_back % unit == 0 && k_back / unit <= depth) points[static_cast<std::size_t>(k_back / unit)] = state;
      try {
        for (std::int64_t j = -k_back; j < 0; ++j) {
          model.step(state, path.cell(j));
          const std::int64_t back = -(j + 1);
          if (back % unit == 0 && back / unit <= depth) points[static_cast<std::size_t>(back / unit)] = state;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::blow_up) throw;
        ok = false;
      }
      if (!ok) continue;
      HistoryChain chain;
      chain.truncated = truncated;
      for (int n = 0; n <= depth && ok; ++n) {
        const double d = (points[static_cast<std::size_t>(n)] - targets[static_cast<std::size_t>(n)]).norm();
        chain.distances.push_back(d);
        const double bound = n == 0 ? params.rho2 : params.beta2 * std::exp(-params.unstable_rate() * n);
        ok = d <= bound;
      }
      if (!ok) continue;
      for (int n = 1; n <= depth; ++n) {
        const ModeVec prev = model.op().vec(points[static_cast<std::size_t>(n)]);
        const ModeVec image = cocycle_eval_steps(model, unit, prev, path.shifted_steps(-n * unit));
        chain.consistency.push_back((image.coords() - points[static_cast<std::size_t>(n - 1)]).norm());
      }
      chain.points = std::move(points);
      UnstableSample sample;
      sample.point = chain.points.front();
      sample.chain = std::move(chain);
      sample.offset = offset;
      sample.shrinks = shrink;
      out.push_back(std::move(sample));
      break;
    }
  }
  if (out.empty()) throw Error(ErrorCode::all_seeds_rejected, "no unstable seed satisfied the history envelope");
  return out;
}

LineFit unstable_backward_rate(const HistoryChain& chain, double noise_floor) {
  if (chain.depth() < 10) throw Error(ErrorCode::chain_too_short, "history chain needs depth 10");
  std::size_t count = 0;
  const std::vector<double> logs = prefix_logs(chain.distances, noise_floor, count);
  if (count < 3) throw Error(ErrorCode::series_too_short, "chain distances fall below the noise floor");
  std::vector<double> n(count);
  for (std::size_t i = 0; i < count; ++i) n[i] = static_cast<double>(i);
  return fit_line(n, logs);
}

LineFit pairwise_backward_rate(const HistoryChain& a, const HistoryChain& b, double noise_floor) {
  const int depth = std::min(a.depth(), b.depth());
  if (depth < 10) throw Error(ErrorCode::chain_too_short, "history chains need depth 10");
  std::vector<double> gaps;
  for (int i = 0; i <= depth; ++i) {
    gaps.push_back((a.points[static_cast<std::size_t>(i)] - b.points[static_cast<std::size_t>(i)]).norm());
  }
  std::size_t count = 0;
  const std::vector<double> logs = prefix_logs(gaps, noise_floor, count);
  if (count < 3) throw Error(ErrorCode::series_too_short, "chain gaps fall below the noise floor");
  std::vector<double> n(count);
  for (std::size_t i = 0; i < count; ++i) n[i] = static_cast<double>(i);
  return fit_line(n, logs);
}

InvarianceReport stable_invariance_check(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                                         const std::vector<Eigen::VectorXd>& stable_points,
                                         const std::vector<double>& t_list, const ManifoldParams& params) {
  InvarianceReport rep;
  for (double t : t_list) {
    const std::int64_t k = model.steps_for(t);
    const WienerPath shifted = path.shifted_steps(k);
    int in = 0;
    int out = 0;
    int boundary = 0;
    for (const auto& x : stable_points) {
      const ModeVec xt = cocycle_eval_steps(model, k, model.op().vec(x), path);
      switch (classify_stable(model, y, shifted, xt.coords(), params).verdict) {
        case StableVerdict::in: ++in; break;
        case StableVerdict::out: ++out; break;
        case StableVerdict::boundary: ++boundary; break;
      }
    }
    rep.t.push_back(t);
    rep.in.push_back(in);
    rep.out.push_back(out);
    rep.boundary.push_back(boundary);
    const double fraction = in + out > 0 ? static_cast<double>(in) / (in + out)
                                         : std::numeric_limits<double>::quiet_NaN();
    rep.fraction.push_back(fraction);
    if (std::isnan(rep.tau1) && fraction == 1.0) rep.tau1 = t;
  }
  return rep;
}

GraphFit fit_graph(const Eigen::MatrixXd& base, const Eigen::MatrixXd& normal, const Eigen::VectorXd& anchor,
                   const std::vector<Eigen::VectorXd>& points, double radius) {
  const auto d = static_cast<int>(base.cols());
  const auto m = static_cast<int>(normal.cols());
  const int nq = d * (d + 1) / 2;
  GraphFit fit;
  fit.linear = Eigen::MatrixXd::Zero(m, d);
  fit.quadratic = Eigen::MatrixXd::Zero(m, nq);
  std::vector<Eigen::VectorXd> a_list;
  std::vector<Eigen::VectorXd> b_list;
  for (const auto& p : points) {
    const Eigen::VectorXd off = p - anchor;
    if (off.norm() > radius) continue;
    a_list.push_back(base.transpose() * off);
    b_list.push_back(normal.transpose() * off);
    fit.radius = std::max(fit.radius, off.norm());
  }
  fit.samples = static_cast<int>(a_list.size());
  if (d == 0 || m == 0) return fit;
  const int needed = std::max(2 * d, d + nq + 1);
  if (fit.samples < needed) {
    throw Error(ErrorCode::insufficient_samples, "graph fit needs " + std::to_string(needed) + " samples within " +
                                                     std::to_string(radius) + ", have " +
                                                     std::to_string(fit.samples));
  }
  Eigen::MatrixXd x(fit.samples, d + nq);
  Eigen::MatrixXd b(fit.samples, m);
  for (int r = 0; r < fit.samples; ++r) {
    const Eigen::VectorXd& a = a_list[static_cast<std::size_t>(r)];
    x.row(r).head(d) = a.transpose();
    int c = d;
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) x(r, c++) = a[i] * a[j];
    }
    b.row(r) = b_list[static_cast<std::size_t>(r)].transpose();
  }
  Eigen::VectorXd scale = x.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < scale.size(); ++c) {
    if (!(scale[c] > 0.0)) throw Error(ErrorCode::fit_ill_conditioned, "graph fit has a vanishing regressor");
  }
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] < 1e-12 * sv[0]) throw Error(ErrorCode::fit_ill_conditioned, "graph fit design is singular");
  const Eigen::MatrixXd coef = scale.cwiseInverse().asDiagonal() * svd.solve(b);
  fit.linear = coef.topRows(d).transpose();
  fit.quadratic = coef.bottomRows(nq).transpose();
  fit.rms_residual = std::sqrt((x * coef - b).squaredNorm() / fit.samples);
  fit.contract_ok = fit.linear.norm() <= 1e-3 * fit.quadratic.norm() * fit.radius + 1e-10;
  return fit;
}

TangencyReport tangency_and_transversality(const Eigen::VectorXd& anchor, const std::vector<Eigen::VectorXd>& stable_points,
                                           const std::vector<Eigen::VectorXd>& unstable_points, const Splitting& split,
                                           const ManifoldParams& params, double angle_floor) {
  TangencyReport rep;
  rep.stable_dim = static_cast<int>(split.stable_basis.cols());
  rep.unstable_dim = static_cast<int>(split.unstable_basis.cols());
  rep.dims_sum_ok = rep.stable_dim + rep.unstable_dim == split.dim();
  rep.stable = fit_graph(split.stable_basis, split.unstable_basis, anchor, stable_points, params.rho1 / 4.0);
  rep.unstable = fit_graph(split.unstable_basis, split.stable_basis, anchor, unstable_points, params.rho2 / 4.0);
  rep.min_angle = min_principal_angle(split.unstable_basis, split.stable_basis);
  rep.angle_floor = angle_floor;
  rep.transversal = rep.min_angle >= angle_floor;
  return rep;
}

ManifoldAtlas build_atlas(const SemiflowModel& model, const StationaryPoint& y, const WienerPath& path,
                          const Splitting& split, const Eigen::MatrixXd& unstable_basis_past,
                          const ManifoldParams& params, const AtlasOptions& options) {
  params.validate();
  ManifoldAtlas atlas;
  atlas.anchor = y.coords_at(path, 0);
  atlas.shift = path.anchor_steps();
  atlas.params = params;

  const int ds = static_cast<int>(split.stable_basis.cols());
  std::vector<Eigen::VectorXd> stable_points;
  if (ds > 0 && std::isfinite(params.lambda_i0)) {
    const auto coords = spread_coordinates(ds, options.stable_points, params.rho1, options.seed);
    stable_points = sample_stable(model, y, path, split, coords, params);
  }
  atlas.stable.resize(stable_points.size());
  parallel_for(stable_points.size(), options.threads, [&](std::size_t i) {
    StableSample& s = atlas.stable[i];
    s.point = stable_points[i];
    s.evidence = classify_stable(model, y, path, s.point, params);
    try {
      s.decay_rate = stable_decay_rate(s.evidence.times, s.evidence.distances, params.noise_floor).slope;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::series_too_short) throw;
    }
  });
  std::vector<Eigen::VectorXd> in_points;
  for (const auto& s : atlas.stable) {
    if (s.evidence.verdict == StableVerdict::in) in_points.push_back(s.point);
  }
  std::vector<Eigen::VectorXd> unstable_points;
  if (unstable_basis_past.cols() > 0) {
    atlas.unstable = build_unstable(model, y, path, unstable_basis_past, params, options.unstable_points,
                                    options.seed + 1);
    for (const auto& u : atlas.unstable) unstable_points.push_back(u.point);
  }
  atlas.tangency = tangency_and_transversality(atlas.anchor, stable_points, unstable_points, split, params);
  if (!in_points.empty()) {
    atlas.invariance = stable_invariance_check(model, y, path, in_points, options.invariance_times, params);
  }
  if (in_points.size() >= 6) {
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (std::size_t i = 0; i + 1 < in_points.size(); ++i) pairs.emplace_back(in_points[i], in_points[i + 1]);
    try {
      atlas.lipschitz = stable_lipschitz_exponent(model, path, pairs, params.n_max, params);
      atlas.has_lipschitz = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::series_too_short && e.code() != ErrorCode::degenerate_pairs) throw;
    }
  }
  return atlas;
}

}  // namespace rdskit
