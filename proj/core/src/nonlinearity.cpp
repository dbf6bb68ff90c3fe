#include "rdskit/nonlinearity.hpp"

#include <cmath>
#include <numbers>

#include "rdskit/error.hpp"

namespace rdskit {

NonlinearitySpec NonlinearitySpec::zero() { return NonlinearitySpec{}; }

NonlinearitySpec NonlinearitySpec::callable(std::string name, VectorField field, VectorFieldJacobian jacobian,
                                            double lipschitz, double sup_norm) {
  if (!field) throw Error(ErrorCode::invalid_argument, "callable nonlinearity needs a field");
  if (!(lipschitz >= 0.0)) throw Error(ErrorCode::invalid_argument, "Lipschitz constant must be non-negative");
  if (!(sup_norm >= 0.0)) throw Error(ErrorCode::invalid_argument, "sup norm must be non-negative");
  NonlinearitySpec spec;
  spec.kind = NonlinearityKind::callable;
  spec.name = std::move(name);
  spec.field = std::move(field);
  spec.jacobian = std::move(jacobian);
  spec.lipschitz = lipschitz;
  spec.sup_norm = sup_norm;
  return spec;
}

NonlinearitySpec NonlinearitySpec::tanh_coupling(Eigen::MatrixXd coupling, double gain, Eigen::VectorXd offset) {
  if (offset.size() != coupling.rows()) throw Error(ErrorCode::invalid_argument, "offset size mismatch");
  const double norm2 = coupling.size() == 0 ? 0.0 : Eigen::JacobiSVD<Eigen::MatrixXd>(coupling).singularValues()(0);
  const double lipschitz = std::abs(gain) * norm2;
  const double bound = std::abs(gain) * std::sqrt(static_cast<double>(coupling.rows())) + offset.norm();
  auto field = [coupling, gain, offset](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return gain * (coupling * u).array().tanh().matrix() + offset;
  };
  auto jac = [coupling, gain](const Eigen::VectorXd& u) -> Eigen::MatrixXd {
    const Eigen::ArrayXd t = (coupling * u).array().tanh();
    return (gain * (1.0 - t * t)).matrix().asDiagonal() * coupling;
  };
  auto spec = callable("tanh-coupling", field, jac, lipschitz, bound);
  spec.smoothness = Smoothness{4, 1.0};
  return spec;
}

NonlinearitySpec NonlinearitySpec::linear(Eigen::MatrixXd matrix) {
  const double norm2 = Eigen::JacobiSVD<Eigen::MatrixXd>(matrix).singularValues()(0);
  auto field = [matrix](const Eigen::VectorXd& u) -> Eigen::VectorXd { return matrix * u; };
  auto jac = [matrix](const Eigen::VectorXd&) -> Eigen::MatrixXd { return matrix; };
  auto spec = callable("linear", field, jac, norm2);
  spec.smoothness = Smoothness{4, 1.0};
  return spec;
}

NonlinearitySpec NonlinearitySpec::pointwise(std::string name, ScalarFunction f, ScalarFunction df,
                                             double lipschitz, double sup_norm) {
  if (!f) throw Error(ErrorCode::invalid_argument, "pointwise nonlinearity needs f");
  NonlinearitySpec spec;
  spec.kind = NonlinearityKind::pointwise;
  spec.name = std::move(name);
  spec.f = std::move(f);
  spec.df = std::move(df);
  spec.lipschitz = lipschitz;
  spec.sup_norm = sup_norm;
  return spec;
}

NonlinearitySpec NonlinearitySpec::dissipative_reaction(double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_argument, "reaction exponent alpha must be positive");
  NonlinearitySpec spec;
  spec.kind = NonlinearityKind::dissipative_reaction;
  spec.name = "dissipative-reaction";
  spec.alpha = alpha;
  spec.f = [alpha](double u) { return u * (1.0 - std::pow(std::abs(u), alpha)); };
  spec.df = [alpha](double u) { return 1.0 - (1.0 + alpha) * std::pow(std::abs(u), alpha); };
  spec.lipschitz = std::numeric_limits<double>::infinity();
  spec.sup_norm = std::numeric_limits<double>::infinity();
  return spec;
}

NonlinearitySpec NonlinearitySpec::burgers() {
  NonlinearitySpec spec;
  spec.kind = NonlinearityKind::burgers_advection;
  spec.name = "burgers-advection";
  spec.lipschitz = std::numeric_limits<double>::infinity();
  spec.sup_norm = std::numeric_limits<double>::infinity();
  spec.smoothness = Smoothness{4, 1.0};
  return spec;
}

bool NonlinearitySpec::differentiable() const {
  switch (kind) {
    case NonlinearityKind::zero:
    case NonlinearityKind::burgers_advection:
    case NonlinearityKind::dissipative_reaction:
      return true;
    case NonlinearityKind::callable:
      return static_cast<bool>(jacobian);
    case NonlinearityKind::pointwise:
      return static_cast<bool>(df);
  }
  return false;
}

bool NonlinearitySpec::needs_collocation() const {
  return kind == NonlinearityKind::pointwise || kind == NonlinearityKind::dissipative_reaction ||
         kind == NonlinearityKind::burgers_advection;
}

// ---------------------------------------------------------------------------

NonlinearityEvaluator::NonlinearityEvaluator(const NonlinearitySpec& spec, const OperatorSpec& op, int collocation)
    : spec_(spec), dim_(op.dim()) {
  if (!spec_.needs_collocation()) return;
  if (op.domain() != DomainTag::dirichlet_laplacian_interval) {
    throw Error(ErrorCode::unsupported, "physical-space nonlinearities need the Dirichlet interval basis");
  }
  const int n = op.dim();
  const int min_points = spec_.kind == NonlinearityKind::burgers_advection ? (3 * n + 1) / 2 : n;
  if (collocation == 0) collocation = std::max(min_points, 2 * n);
  if (collocation < min_points) {
    throw Error(ErrorCode::invalid_argument, "collocation size " + std::to_string(collocation) +
                                                 " below the dealiasing minimum " + std::to_string(min_points));
  }
  const int m = collocation;
  weight_ = 1.0 / (m + 1);
  sine_.resize(m, n);
  cosine_.resize(m, n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < m; ++i) {
    const double xi = (i + 1) * weight_;
    for (int k = 0; k < n; ++k) {
      const double arg = (k + 1) * pi * xi;
      sine_(i, k) = std::numbers::sqrt2 * std::sin(arg);
      cosine_(i, k) = (k + 1) * pi / std::numbers::sqrt2 * std::cos(arg);
    }
  }
}

Eigen::VectorXd NonlinearityEvaluator::to_grid(const Eigen::VectorXd& coords) const {
  if (sine_.size() == 0) throw Error(ErrorCode::unsupported, "no collocation grid for this nonlinearity");
  return sine_ * coords;
}

Eigen::VectorXd NonlinearityEvaluator::from_grid(const Eigen::VectorXd& values) const {
  if (sine_.size() == 0) throw Error(ErrorCode::unsupported, "no collocation grid for this nonlinearity");
  return weight_ * (sine_.transpose() * values);
}

void NonlinearityEvaluator::eval(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  switch (spec_.kind) {
    case NonlinearityKind::zero:
      out.setZero(u.size());
      return;
    case NonlinearityKind::callable:
      out = spec_.field(u);
      if (out.size() != u.size()) throw Error(ErrorCode::invalid_argument, "callable F returned the wrong size");
      return;
    case NonlinearityKind::pointwise:
    case NonlinearityKind::dissipative_reaction: {
      Eigen::VectorXd g = sine_ * u;
      for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = spec_.f(g[i]);
      out.noalias() = weight_ * (sine_.transpose() * g);
      return;
    }
    case NonlinearityKind::burgers_advection: {
      // -(1/2) d(u^2)/dxi projected on sqrt(2) sin(n pi xi): after integrating by
      // parts the n-th coefficient is (n pi / sqrt 2) * int u^2 cos(n pi xi). The
      // trapezoid sum is exact while 3N < 2(M+1).
      const Eigen::ArrayXd g = (sine_ * u).array();
      const Eigen::VectorXd sq = (g * g).matrix();
      out.noalias() = weight_ * (cosine_.transpose() * sq);
      return;
    }
  }
}

void NonlinearityEvaluator::jacobian_apply(const Eigen::VectorXd& u, const Eigen::MatrixXd& v,
                                           Eigen::MatrixXd& out) const {
  switch (spec_.kind) {
    case NonlinearityKind::zero:
      out.setZero(v.rows(), v.cols());
      return;
    case NonlinearityKind::callable:
      if (!spec_.jacobian) throw Error(ErrorCode::unsupported, "callable F has no derivative");
      out.noalias() = spec_.jacobian(u) * v;
      return;
    case NonlinearityKind::pointwise:
    case NonlinearityKind::dissipative_reaction: {
      if (!spec_.df) throw Error(ErrorCode::unsupported, "pointwise f has no derivative");
      Eigen::VectorXd g = sine_ * u;
      for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = spec_.df(g[i]);
      const Eigen::MatrixXd gv = g.asDiagonal() * (sine_ * v);
      out.noalias() = weight_ * (sine_.transpose() * gv);
      return;
    }
    case NonlinearityKind::burgers_advection: {
      const Eigen::VectorXd g = 2.0 * (sine_ * u);
      const Eigen::MatrixXd gv = g.asDiagonal() * (sine_ * v);
      out.noalias() = weight_ * (cosine_.transpose() * gv);
      return;
    }
  }
}

Eigen::MatrixXd NonlinearityEvaluator::jacobian(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd out;
  jacobian_apply(u, Eigen::MatrixXd::Identity(dim_, dim_), out);
  return out;
}

}  // namespace rdskit
