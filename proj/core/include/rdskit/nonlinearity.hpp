#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "rdskit/spectral_space.hpp"

namespace rdskit {

enum class NonlinearityKind {
  zero,
  callable,              // F given on mode coordinates, with recorded L and sup |F|
  pointwise,             // u(xi) -> f(u(xi)) evaluated at collocation points
  dissipative_reaction,  // u (1 - |u|^alpha)
  burgers_advection,     // -u du/dxi, conservative form -(1/2) d(u^2)/dxi
};

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using VectorFieldJacobian = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using ScalarFunction = std::function<double(double)>;

struct Smoothness {
  int k = 1;
  double eps = 1.0;
};

/// Declarative description of the drift nonlinearity F.
struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::zero;
  std::string name = "zero";
  VectorField field;
  VectorFieldJacobian jacobian;
  ScalarFunction f;
  ScalarFunction df;
  double alpha = 0.0;
  double lipschitz = 0.0;
  double sup_norm = 0.0;
  Smoothness smoothness{};
  // The C^{k,eps} integrability hypothesis of the manifold theorem cannot be
  // checked numerically; it is carried as a declared flag only.
  bool integrability_assumed = false;

  static NonlinearitySpec zero();
  static NonlinearitySpec callable(std::string name, VectorField field, VectorFieldJacobian jacobian,
                                   double lipschitz, double sup_norm = std::numeric_limits<double>::infinity());
  // F(u) = gain * tanh(C u) + offset; L = |gain| * ||C||_2 and
  // sup |F| <= |gain| * sqrt(rows) + |offset|.
  static NonlinearitySpec tanh_coupling(Eigen::MatrixXd coupling, double gain, Eigen::VectorXd offset);
  // F(u) = M u; Lipschitz with L = ||M||_2, unbounded.
  static NonlinearitySpec linear(Eigen::MatrixXd matrix);
  static NonlinearitySpec pointwise(std::string name, ScalarFunction f, ScalarFunction df, double lipschitz,
                                    double sup_norm);
  static NonlinearitySpec dissipative_reaction(double alpha);
  static NonlinearitySpec burgers();

  bool differentiable() const;
  bool globally_bounded() const { return std::isfinite(sup_norm) && std::isfinite(lipschitz); }
  bool needs_collocation() const;
  // alpha < 4/d, the exponent range in which the reaction-diffusion semiflow
  // is known to carry C^1 manifolds.
  bool alpha_subcritical(int space_dim) const { return alpha < 4.0 / space_dim; }
};

/// F bound to a concrete basis: collocation matrices are precomputed for the
/// kinds that work in physical space. Immutable after construction.
class NonlinearityEvaluator {
 public:
  NonlinearityEvaluator(const NonlinearitySpec& spec, const OperatorSpec& op, int collocation);

  bool is_zero() const { return spec_.kind == NonlinearityKind::zero; }
  const NonlinearitySpec& spec() const { return spec_; }
  int collocation() const { return static_cast<int>(sine_.rows()); }

  void eval(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out;
    eval(u, out);
    return out;
  }
  // out = DF(u) * v for a block of tangent vectors.
  void jacobian_apply(const Eigen::VectorXd& u, const Eigen::MatrixXd& v, Eigen::MatrixXd& out) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const;

  // Physical-space values at the collocation points xi_i = i/(M+1), i = 1..M,
  // of the sine expansion sum_n c_n sqrt(2) sin(n pi xi).
  Eigen::VectorXd to_grid(const Eigen::VectorXd& coords) const;
  // Discrete sine projection back onto the first N modes.
  Eigen::VectorXd from_grid(const Eigen::VectorXd& values) const;

 private:
  NonlinearitySpec spec_;
  int dim_ = 0;
  Eigen::MatrixXd sine_;    // M x N, sqrt(2) sin(n pi xi_i)
  Eigen::MatrixXd cosine_;  // M x N, (n pi / sqrt(2)) cos(n pi xi_i)
  double weight_ = 0.0;     // 1 / (M + 1)
};

}  // namespace rdskit
