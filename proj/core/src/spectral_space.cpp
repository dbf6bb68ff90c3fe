#include "rdskit/spectral_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "rdskit/error.hpp"

namespace rdskit {
namespace {

void require_same_basis(const ModeVec& a, const ModeVec& b) {
  if (a.basis_id() != b.basis_id() || a.size() != b.size()) {
    throw Error(ErrorCode::basis_mismatch, "mode vectors belong to different bases");
  }
}

void require_basis(const OperatorSpec& op, const ModeVec& v) {
  if (v.basis_id() != op.basis_id() || v.size() != op.dim()) {
    throw Error(ErrorCode::basis_mismatch, "mode vector does not belong to this operator");
  }
}

// FNV-1a over the tag and the eigenvalue bit patterns; identical operators
// built twice share a basis id.
std::uint64_t fingerprint(DomainTag tag, const std::vector<double>& values) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(tag));
  for (double v : values) mix(std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace

ModeVec& ModeVec::operator+=(const ModeVec& other) {
  require_same_basis(*this, other);
  coords_ += other.coords_;
  return *this;
}

ModeVec& ModeVec::operator-=(const ModeVec& other) {
  require_same_basis(*this, other);
  coords_ -= other.coords_;
  return *this;
}

void OperatorSpec::finalize(bool require_splitting) {
  if (eigenvalues_.empty()) throw Error(ErrorCode::invalid_argument, "operator needs at least one eigenvalue");
  for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
    if (!std::isfinite(eigenvalues_[i])) throw Error(ErrorCode::invalid_argument, "eigenvalues must be finite");
    if (i > 0 && eigenvalues_[i] < eigenvalues_[i - 1]) {
      throw Error(ErrorCode::invalid_argument, "eigenvalues must be sorted non-decreasingly");
    }
  }
  const bool has_zero = std::any_of(eigenvalues_.begin(), eigenvalues_.end(), [](double v) { return v == 0.0; });
  if (has_zero && require_splitting) {
    throw Error(ErrorCode::zero_eigenvalue, "a vanishing eigenvalue leaves the splitting undefined");
  }
  splitting_ = !has_zero;
  minus_dim_ = static_cast<int>(std::count_if(eigenvalues_.begin(), eigenvalues_.end(), [](double v) { return v < 0.0; }));
  basis_id_ = fingerprint(domain_, eigenvalues_);
}

OperatorSpec OperatorSpec::from_eigenvalues(std::vector<double> eigenvalues, bool require_splitting) {
  OperatorSpec op;
  op.eigenvalues_ = std::move(eigenvalues);
  op.domain_ = DomainTag::abstract;
  op.finalize(require_splitting);
  return op;
}

OperatorSpec OperatorSpec::dirichlet_interval(int modes, double viscosity) {
  if (modes < 1) throw Error(ErrorCode::invalid_argument, "need at least one mode");
  if (!(viscosity > 0.0)) throw Error(ErrorCode::invalid_argument, "viscosity must be positive");
  OperatorSpec op;
  op.domain_ = DomainTag::dirichlet_laplacian_interval;
  op.viscosity_ = viscosity;
  op.box_dim_ = 1;
  op.eigenvalues_.resize(static_cast<std::size_t>(modes));
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int n = 1; n <= modes; ++n) op.eigenvalues_[static_cast<std::size_t>(n - 1)] = viscosity * n * n * pi2;
  op.finalize(true);
  return op;
}

OperatorSpec OperatorSpec::dirichlet_box(int modes, int dim, double viscosity) {
  if (modes < 1 || dim < 1) throw Error(ErrorCode::invalid_argument, "need at least one mode and dimension");
  if (!(viscosity > 0.0)) throw Error(ErrorCode::invalid_argument, "viscosity must be positive");
  // Enumerate multi-indices with |k|^2 below a growing bound until enough are found.
  std::vector<long> squares;
  for (long bound = 1;; bound *= 2) {
    squares.clear();
    std::vector<long> k(static_cast<std::size_t>(dim), 1);
    while (true) {
      long s = 0;
      for (long v : k) s += v * v;
      if (s <= bound) squares.push_back(s);
      std::size_t i = 0;
      for (; i < k.size(); ++i) {
        ++k[i];
        if (k[i] * k[i] <= bound) break;
        k[i] = 1;
      }
      if (i == k.size()) break;
    }
    if (static_cast<int>(squares.size()) >= modes) break;
  }
  std::sort(squares.begin(), squares.end());
  OperatorSpec op;
  op.domain_ = DomainTag::dirichlet_laplacian_box;
  op.viscosity_ = viscosity;
  op.box_dim_ = dim;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int n = 0; n < modes; ++n) op.eigenvalues_.push_back(viscosity * pi2 * static_cast<double>(squares[static_cast<std::size_t>(n)]));
  op.finalize(true);
  return op;
}

bool OperatorSpec::strictly_increasing() const {
  return std::adjacent_find(eigenvalues_.begin(), eigenvalues_.end(),
                            [](double a, double b) { return !(a < b); }) == eigenvalues_.end();
}

double OperatorSpec::largest_negative() const {
  return minus_dim_ > 0 ? eigenvalues_[static_cast<std::size_t>(minus_dim_ - 1)]
                        : std::numeric_limits<double>::quiet_NaN();
}

double OperatorSpec::smallest_positive() const {
  for (double v : eigenvalues_) {
    if (v > 0.0) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double OperatorSpec::inverse_trace() const {
  double s = 0.0;
  for (double v : eigenvalues_) s += 1.0 / std::abs(v);
  return s;
}

ModeVec OperatorSpec::zero() const { return ModeVec(Eigen::VectorXd::Zero(dim()), basis_id_); }

ModeVec OperatorSpec::vec(Eigen::VectorXd coords) const {
  if (coords.size() != dim()) throw Error(ErrorCode::basis_mismatch, "coordinate count does not match the operator");
  return ModeVec(std::move(coords), basis_id_);
}

ModeVec OperatorSpec::unit(int n) const {
  ModeVec v = zero();
  v.coords()[n] = 1.0;
  return v;
}

ModeVec semigroup_apply(const OperatorSpec& op, double t, const ModeVec& v) {
  if (!(t >= 0.0)) throw Error(ErrorCode::invalid_argument, "semigroup time must be non-negative");
  require_basis(op, v);
  ModeVec out = v;
  for (int n = 0; n < op.dim(); ++n) out.coords()[n] *= std::exp(-op.eigenvalue(n) * t);
  return out;
}

ModeVec project(const OperatorSpec& op, Subspace which, const ModeVec& v) {
  require_basis(op, v);
  if (!op.has_splitting()) throw Error(ErrorCode::zero_eigenvalue, "operator has no hyperbolic splitting");
  ModeVec out = v;
  const int m = op.minus_dim();
  if (which == Subspace::plus) {
    out.coords().head(m).setZero();
  } else {
    out.coords().tail(op.dim() - m).setZero();
  }
  return out;
}

ModeVec semigroup_inverse_minus(const OperatorSpec& op, double t, const ModeVec& v) {
  if (!(t >= 0.0)) throw Error(ErrorCode::invalid_argument, "semigroup time must be non-negative");
  require_basis(op, v);
  const int m = op.minus_dim();
  for (int n = m; n < op.dim(); ++n) {
    if (std::abs(v[n]) > 1e-12) {
      throw Error(ErrorCode::not_in_minus_subspace, "vector has a nonzero H+ coordinate");
    }
  }
  ModeVec out = v;
  for (int n = 0; n < m; ++n) out.coords()[n] *= std::exp(op.eigenvalue(n) * t);
  for (int n = m; n < op.dim(); ++n) out.coords()[n] = 0.0;
  return out;
}

}  // namespace rdskit
