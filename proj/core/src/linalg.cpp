#include "rdskit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdskit/error.hpp"

namespace rdskit {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.cols() == 0) return Eigen::MatrixXd(m.rows(), 0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(rel_tol);
  const Eigen::Index rank = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), rank);
  return q;
}

Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  const Eigen::Index p = q.cols();
  if (p == 0) return Eigen::MatrixXd::Identity(n, n);
  if (p >= n) return Eigen::MatrixXd(n, 0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return full.rightCols(n - p);
}

std::vector<double> principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::invalid_argument, "subspaces live in different spaces");
  if (a.cols() == 0 || b.cols() == 0) return {};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    angles.push_back(std::acos(std::clamp(svd.singularValues()[i], 0.0, 1.0)));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::invalid_argument, "subspace distance needs equal dimensions");
  }
  if (a.cols() == 0) return 0.0;
  const Eigen::MatrixXd r = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  return std::asin(std::clamp(svd.singularValues()[0], 0.0, 1.0));
}

double min_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto angles = principal_angles(a, b);
  return angles.empty() ? std::numbers::pi / 2 : angles.front();
}

double relative_distance_to_span(const Eigen::MatrixXd& q, const Eigen::VectorXd& x) {
  const double nx = x.norm();
  if (nx == 0.0) return 0.0;
  if (q.cols() == 0) return 1.0;
  return (x - q * (q.transpose() * x)).norm() / nx;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::invalid_argument, "regression inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::series_too_short, "line fit needs at least 3 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::fit_ill_conditioned, "regression abscissae are all equal");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double sse = std::max(0.0, syy - fit.slope * sxy);
  fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

}  // namespace rdskit
