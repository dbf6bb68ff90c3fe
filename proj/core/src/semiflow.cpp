#include "rdskit/semiflow.hpp"

#include <cmath>
#include <string>

#include "rdskit/error.hpp"

namespace rdskit {
namespace {

// (1 - e^{-mu h}) / mu, continuous through mu = 0.
double phi_coefficient(double mu, double h) {
  const double x = mu * h;
  if (std::abs(x) < 1e-8) return h * (1.0 - 0.5 * x);
  return -std::expm1(-x) / mu;
}

// sqrt((1 - e^{-2 mu h}) / (2 mu h)): scales dW so that G dW has the variance of
// int_0^h e^{-mu (h - s)} dW(s).
double noise_gain_coefficient(double mu, double h) {
  const double x = 2.0 * mu * h;
  if (std::abs(x) < 1e-8) return std::sqrt(1.0 - 0.5 * x);
  return std::sqrt(-std::expm1(-x) / x);
}

void check_state(const Eigen::VectorXd& u, double cap) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(std::abs(u[i]) <= cap)) {
      throw Error(ErrorCode::blow_up, "coordinate " + std::to_string(i) + " exceeded the magnitude cap");
    }
  }
}

}  // namespace

SemiflowModel::SemiflowModel(OperatorSpec op, NonlinearitySpec nonlinearity, CovarianceSpec noise,
                             NoiseCoupling coupling, StepperConfig stepper)
    : op_(std::move(op)), noise_(std::move(noise)), coupling_(coupling), stepper_(stepper) {
  if (!(stepper_.h > 0.0) || !std::isfinite(stepper_.h)) {
    throw Error(ErrorCode::invalid_grid, "time step must be positive");
  }
  if (!(stepper_.blowup_cap > 0.0)) throw Error(ErrorCode::invalid_argument, "blow-up cap must be positive");
  evaluator_ = std::make_shared<const NonlinearityEvaluator>(nonlinearity, op_, stepper_.collocation);
  stepper_.collocation = evaluator_->collocation();

  const int n = op_.dim();
  const double h = stepper_.h;
  decay_.resize(n);
  phi_.resize(n);
  gain_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double mu = op_.eigenvalue(i);
    decay_[i] = std::exp(-mu * h);
    phi_[i] = phi_coefficient(mu, h);
    gain_[i] = noise_gain_coefficient(mu, h);
  }
  sigma_ = Eigen::ArrayXd::Zero(n);
  switch (coupling_) {
    case NoiseCoupling::none:
      break;
    case NoiseCoupling::additive:
      gain_b0_ = gain_.matrix().asDiagonal() * noise_.coupling(n);
      break;
    case NoiseCoupling::diagonal_multiplicative:
      if (noise_.kind != CovarianceKind::cylindrical) {
        throw Error(ErrorCode::unsupported, "multiplicative noise takes per-mode amplitudes only");
      }
      if (noise_.mode_count() != n) {
        throw Error(ErrorCode::invalid_argument, "multiplicative noise needs one amplitude per state mode");
      }
      for (int i = 0; i < n; ++i) sigma_[i] = noise_.sigma[static_cast<std::size_t>(i)];
      break;
  }
}

std::int64_t SemiflowModel::steps_for(double duration) const {
  if (!(duration >= 0.0)) throw Error(ErrorCode::invalid_argument, "duration must be non-negative");
  const double ratio = duration / stepper_.h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorCode::grid_misaligned, "duration is not a multiple of the time step");
  }
  return static_cast<std::int64_t>(rounded);
}

void SemiflowModel::check_path(const WienerPath& path) const {
  if (std::abs(path.step() - stepper_.h) > 1e-12 * stepper_.h) {
    throw Error(ErrorCode::grid_misaligned, "noise path step differs from the model step");
  }
  if (coupling_ != NoiseCoupling::none && path.mode_count() != noise_modes()) {
    throw Error(ErrorCode::invalid_argument, "noise path carries " + std::to_string(path.mode_count()) +
                                                 " modes, model expects " + std::to_string(noise_modes()));
  }
}

void SemiflowModel::step(Eigen::VectorXd& u, std::span<const double> dw, Eigen::MatrixXd* tangent) const {
  const bool has_f = !evaluator_->is_zero();
  Eigen::VectorXd f;
  Eigen::MatrixXd dfv;
  if (has_f) {
    evaluator_->eval(u, f);
    if (tangent != nullptr) evaluator_->jacobian_apply(u, *tangent, dfv);
  }

  Eigen::VectorXd next = (decay_ * u.array()).matrix();
  if (has_f) next.array() += phi_ * f.array();

  switch (coupling_) {
    case NoiseCoupling::none:
      if (tangent != nullptr) {
        Eigen::MatrixXd v = decay_.matrix().asDiagonal() * (*tangent);
        if (has_f) v.noalias() += phi_.matrix().asDiagonal() * dfv;
        *tangent = std::move(v);
      }
      break;
    case NoiseCoupling::additive: {
      const Eigen::Map<const Eigen::VectorXd> w(dw.data(), static_cast<Eigen::Index>(dw.size()));
      next.noalias() += gain_b0_ * w;
      if (tangent != nullptr) {
        Eigen::MatrixXd v = decay_.matrix().asDiagonal() * (*tangent);
        if (has_f) v.noalias() += phi_.matrix().asDiagonal() * dfv;
        *tangent = std::move(v);
      }
      break;
    }
    case NoiseCoupling::diagonal_multiplicative: {
      const Eigen::Map<const Eigen::ArrayXd> w(dw.data(), static_cast<Eigen::Index>(dw.size()));
      const Eigen::ArrayXd mult = decay_ * (1.0 + sigma_ * w + 0.5 * sigma_ * sigma_ * (w * w - stepper_.h));
      next = (mult * u.array()).matrix();
      if (has_f) next.array() += phi_ * f.array();
      if (tangent != nullptr) {
        Eigen::MatrixXd v = mult.matrix().asDiagonal() * (*tangent);
        if (has_f) v.noalias() += phi_.matrix().asDiagonal() * dfv;
        *tangent = std::move(v);
      }
      break;
    }
  }
  check_state(next, stepper_.blowup_cap);
  u = std::move(next);
}

CocycleTrajectory evolve_steps(const SemiflowModel& model, const ModeVec& x, const WienerPath& path,
                               std::int64_t steps, const EvolveOptions& options) {
  if (steps < 0) throw Error(ErrorCode::invalid_argument, "step count must be non-negative");
  if (x.basis_id() != model.op().basis_id() || x.size() != model.dim()) {
    throw Error(ErrorCode::basis_mismatch, "initial state is not in the model's basis");
  }
  model.check_path(path);
  if (!path.contains_cells(0, steps)) {
    throw Error(ErrorCode::out_of_window, "noise path does not cover the integration interval");
  }
  const std::int64_t every = std::max<std::int64_t>(1, options.record_every);
  const bool want_tangent = options.tangent || options.record_tangents;

  CocycleTrajectory traj;
  traj.path = path;
  Eigen::VectorXd u = x.coords();
  Eigen::MatrixXd v;
  if (want_tangent) v = Eigen::MatrixXd::Identity(model.dim(), model.dim());

  auto record = [&](std::int64_t j) {
    traj.times.push_back(static_cast<double>(j) * model.h());
    traj.states.emplace_back(u, x.basis_id());
    if (options.record_tangents) traj.tangents.push_back(v);
  };
  record(0);
  for (std::int64_t j = 0; j < steps; ++j) {
    model.step(u, path.cell(j), want_tangent ? &v : nullptr);
    if ((j + 1) % every == 0 || j + 1 == steps) record(j + 1);
  }
  if (want_tangent) traj.final_tangent = std::move(v);
  return traj;
}

CocycleTrajectory evolve(const SemiflowModel& model, const ModeVec& x, const WienerPath& path, double duration,
                         const EvolveOptions& options) {
  return evolve_steps(model, x, path, model.steps_for(duration), options);
}

ModeVec cocycle_eval_steps(const SemiflowModel& model, std::int64_t steps, const ModeVec& x, const WienerPath& path) {
  if (x.basis_id() != model.op().basis_id() || x.size() != model.dim()) {
    throw Error(ErrorCode::basis_mismatch, "initial state is not in the model's basis");
  }
  model.check_path(path);
  if (!path.contains_cells(0, steps)) {
    throw Error(ErrorCode::out_of_window, "noise path does not cover the integration interval");
  }
  Eigen::VectorXd u = x.coords();
  for (std::int64_t j = 0; j < steps; ++j) model.step(u, path.cell(j));
  return ModeVec(std::move(u), x.basis_id());
}

ModeVec cocycle_eval(const SemiflowModel& model, double t, const ModeVec& x, const WienerPath& path) {
  return cocycle_eval_steps(model, model.steps_for(t), x, path);
}

std::pair<ModeVec, Eigen::MatrixXd> tangent_eval_steps(const SemiflowModel& model, std::int64_t steps,
                                                       const ModeVec& x, const WienerPath& path) {
  if (!model.nonlinearity().differentiable()) {
    throw Error(ErrorCode::unsupported, "nonlinearity has no derivative");
  }
  if (x.basis_id() != model.op().basis_id() || x.size() != model.dim()) {
    throw Error(ErrorCode::basis_mismatch, "initial state is not in the model's basis");
  }
  model.check_path(path);
  if (!path.contains_cells(0, steps)) {
    throw Error(ErrorCode::out_of_window, "noise path does not cover the integration interval");
  }
  Eigen::VectorXd u = x.coords();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(model.dim(), model.dim());
  for (std::int64_t j = 0; j < steps; ++j) model.step(u, path.cell(j), &v);
  return {ModeVec(std::move(u), x.basis_id()), std::move(v)};
}

std::pair<ModeVec, Eigen::MatrixXd> tangent_eval(const SemiflowModel& model, double t, const ModeVec& x,
                                                 const WienerPath& path) {
  return tangent_eval_steps(model, model.steps_for(t), x, path);
}

ModeVec centered_eval(const SemiflowModel& model, const StationaryPoint& y, double t, const ModeVec& z,
                      const WienerPath& path) {
  const std::int64_t steps = model.steps_for(t);
  const ModeVec y0 = y.at(path, 0);
  const ModeVec yt = y.at(path, steps);
  return cocycle_eval_steps(model, steps, z + y0, path) - yt;
}

ModeVec backward_centered_eval(const SemiflowModel& model, const StationaryPoint& y, double t, const ModeVec& z,
                               const WienerPath& path) {
  const std::int64_t steps = model.steps_for(t);
  return centered_eval(model, y, t, z, path.shifted_steps(-steps));
}

Eigen::MatrixXd backward_centered_jacobian(const SemiflowModel& model, const StationaryPoint& y, double t,
                                           const WienerPath& path) {
  const std::int64_t steps = model.steps_for(t);
  const WienerPath past = path.shifted_steps(-steps);
  return tangent_eval_steps(model, steps, y.at(past, 0), past).second;
}

}  // namespace rdskit
