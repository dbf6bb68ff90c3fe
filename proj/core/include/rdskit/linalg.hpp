#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rdskit {

// Orthonormal basis of the column span, rank decided at rel_tol.
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

// Orthonormal basis of the orthogonal complement of span(q); q orthonormal.
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& q);

// Principal angles between span(a) and span(b) (orthonormal columns), ascending.
std::vector<double> principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Largest principal angle between equal-dimensional subspaces, via the sine
// ||(I - a a^T) b||_2 so small angles keep full precision.
double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Smallest principal angle; pi/2 when either side is empty.
double min_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// |x - q q^T x| / |x|.
double relative_distance_to_span(const Eigen::MatrixXd& q, const Eigen::VectorXd& x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = slope * x + intercept; needs at least 3 points.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace rdskit
