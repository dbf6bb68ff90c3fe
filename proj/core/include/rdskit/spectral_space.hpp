#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace rdskit {

enum class DomainTag {
  abstract,
  dirichlet_laplacian_interval,
  dirichlet_laplacian_box,
};

enum class Subspace { plus, minus };

/// Coordinates of a state in the eigenbasis of A. The H-norm is the
/// Euclidean norm of the coordinates because the basis is orthonormal.
class ModeVec {
 public:
  ModeVec() = default;
  ModeVec(Eigen::VectorXd coords, std::uint64_t basis_id) : coords_(std::move(coords)), basis_id_(basis_id) {}

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::VectorXd& coords() { return coords_; }
  std::uint64_t basis_id() const { return basis_id_; }
  Eigen::Index size() const { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_[i]; }
  double norm() const { return coords_.norm(); }

  ModeVec& operator+=(const ModeVec& other);
  ModeVec& operator-=(const ModeVec& other);
  ModeVec& operator*=(double s) {
    coords_ *= s;
    return *this;
  }

  friend ModeVec operator+(ModeVec a, const ModeVec& b) { return a += b; }
  friend ModeVec operator-(ModeVec a, const ModeVec& b) { return a -= b; }
  friend ModeVec operator*(double s, ModeVec v) { return v *= s; }

 private:
  Eigen::VectorXd coords_;
  std::uint64_t basis_id_ = 0;
};

/// The self-adjoint operator A, stored through its eigenvalues.
///
/// Eigenvalues are kept sorted non-decreasingly. Repeated values are allowed
/// (spectrum tests need multiplicities); the H = H+ (+) H- splitting is only
/// available when no eigenvalue vanishes.
class OperatorSpec {
 public:
  // Eigenvalues must be finite and non-decreasing. With require_splitting a
  // vanishing eigenvalue is rejected with zero_eigenvalue.
  static OperatorSpec from_eigenvalues(std::vector<double> eigenvalues, bool require_splitting = true);
  // -viscosity * d^2/dxi^2 on (0, 1) with Dirichlet conditions:
  // mu_n = viscosity * n^2 * pi^2, n = 1..modes. viscosity = 1/2 gives the
  // (1/2)-Laplacian.
  static OperatorSpec dirichlet_interval(int modes, double viscosity);
  // -viscosity * Laplacian on the unit box (0,1)^dim, keeping the `modes`
  // smallest eigenvalues viscosity * pi^2 * |k|^2.
  static OperatorSpec dirichlet_box(int modes, int dim, double viscosity);

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int n) const { return eigenvalues_[static_cast<std::size_t>(n)]; }
  // Number of negative eigenvalues, i.e. dim H-.
  int minus_dim() const { return minus_dim_; }
  DomainTag domain() const { return domain_; }
  double viscosity() const { return viscosity_; }
  int box_dim() const { return box_dim_; }
  std::uint64_t basis_id() const { return basis_id_; }

  bool has_splitting() const { return splitting_; }
  bool strictly_increasing() const;
  // mu_m (largest negative) and mu_{m+1} (smallest positive); NaN when the
  // corresponding block is empty.
  double largest_negative() const;
  double smallest_positive() const;
  // sum 1/|mu_n|, the truncated trace of |A^{-1}|.
  double inverse_trace() const;

  ModeVec zero() const;
  ModeVec vec(Eigen::VectorXd coords) const;
  ModeVec unit(int n) const;

 private:
  std::vector<double> eigenvalues_;
  int minus_dim_ = 0;
  DomainTag domain_ = DomainTag::abstract;
  double viscosity_ = 0.0;
  int box_dim_ = 0;
  bool splitting_ = false;
  std::uint64_t basis_id_ = 0;

  void finalize(bool require_splitting);
};

// T_t v: coordinate n scaled by exp(-mu_n t); t >= 0.
ModeVec semigroup_apply(const OperatorSpec& op, double t, const ModeVec& v);

// p+ v or p- v; H- is spanned by the negative-eigenvalue modes.
ModeVec project(const OperatorSpec& op, Subspace which, const ModeVec& v);

// T_{-t} = (T_t restricted to H-)^{-1}; coordinate n <= m scaled by
// exp(mu_n t). Throws not_in_minus_subspace if v has an H+ coordinate
// larger than 1e-12.
ModeVec semigroup_inverse_minus(const OperatorSpec& op, double t, const ModeVec& v);

}  // namespace rdskit
