#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rdskit/noise.hpp"
#include "rdskit/nonlinearity.hpp"
#include "rdskit/spectral_space.hpp"
#include "rdskit/stationary_point.hpp"

namespace rdskit {

enum class NoiseCoupling {
  none,
  additive,                // B0 dW
  diagonal_multiplicative  // sigma_n u_n dW_n, Ito
};

struct StepperConfig {
  double h = 1e-2;
  // Collocation points for physical-space nonlinearities; 0 picks a default.
  int collocation = 0;
  // Any coordinate above this magnitude aborts the integration with blow_up.
  double blowup_cap = 1e8;
};

/// du = (-A u + F(u)) dt + noise, discretized by exponential Euler on the
/// path's grid:
///
///   u_{j+1} = e^{-A h} u_j + A^{-1}(1 - e^{-A h}) F(u_j) + xi_j
///
/// with xi_j = G B0 dW_j for additive noise, where G_n is chosen so the
/// per-mode stationary variance of the linear part is exact, and
/// xi_j = e^{-A h}(sigma dW_j + sigma^2 (dW_j^2 - h)/2) u_j for diagonal
/// multiplicative noise (Ito with the diagonal Milstein correction).
class SemiflowModel {
 public:
  SemiflowModel(OperatorSpec op, NonlinearitySpec nonlinearity, CovarianceSpec noise, NoiseCoupling coupling,
                StepperConfig stepper);

  const OperatorSpec& op() const { return op_; }
  const NonlinearitySpec& nonlinearity() const { return evaluator_->spec(); }
  const NonlinearityEvaluator& evaluator() const { return *evaluator_; }
  const CovarianceSpec& covariance() const { return noise_; }
  NoiseCoupling coupling() const { return coupling_; }
  const StepperConfig& stepper() const { return stepper_; }
  double h() const { return stepper_.h; }
  int dim() const { return op_.dim(); }
  // Number of scalar Wiener processes the path must carry.
  int noise_modes() const { return noise_.mode_count(); }

  const Eigen::ArrayXd& decay() const { return decay_; }
  const Eigen::ArrayXd& phi() const { return phi_; }
  const Eigen::ArrayXd& noise_gain() const { return gain_; }
  // G B0 for additive coupling (N x K).
  const Eigen::MatrixXd& additive_coupling() const { return gain_b0_; }
  const Eigen::ArrayXd& sigma() const { return sigma_; }

  // One grid step in place. When `tangent` is non-null it is advanced by the
  // variational equation with the same increments, evaluated at the old state.
  void step(Eigen::VectorXd& u, std::span<const double> dw, Eigen::MatrixXd* tangent = nullptr) const;

  // Steps needed to cover `duration`, checking grid alignment.
  std::int64_t steps_for(double duration) const;
  // Throws if the path's grid is incompatible with the model.
  void check_path(const WienerPath& path) const;

 private:
  OperatorSpec op_;
  std::shared_ptr<const NonlinearityEvaluator> evaluator_;
  CovarianceSpec noise_;
  NoiseCoupling coupling_;
  StepperConfig stepper_;
  Eigen::ArrayXd decay_;
  Eigen::ArrayXd phi_;
  Eigen::ArrayXd gain_;
  Eigen::MatrixXd gain_b0_;
  Eigen::ArrayXd sigma_;
};

struct EvolveOptions {
  bool tangent = false;
  bool record_tangents = false;
  // Store every k-th state (the final state is always stored).
  std::int64_t record_every = 1;
};

struct CocycleTrajectory {
  std::vector<double> times;
  std::vector<ModeVec> states;
  // Per recorded time when requested; tangents.front() is the identity.
  std::vector<Eigen::MatrixXd> tangents;
  std::optional<Eigen::MatrixXd> final_tangent;
  WienerPath path;  // the path (with its anchor) that drove the run
};

CocycleTrajectory evolve(const SemiflowModel& model, const ModeVec& x, const WienerPath& path, double duration,
                         const EvolveOptions& options = {});
CocycleTrajectory evolve_steps(const SemiflowModel& model, const ModeVec& x, const WienerPath& path,
                               std::int64_t steps, const EvolveOptions& options = {});

// U(t, x, omega).
ModeVec cocycle_eval(const SemiflowModel& model, double t, const ModeVec& x, const WienerPath& path);
ModeVec cocycle_eval_steps(const SemiflowModel& model, std::int64_t steps, const ModeVec& x, const WienerPath& path);

// (U(t, x, omega), DU(t, x, omega)).
std::pair<ModeVec, Eigen::MatrixXd> tangent_eval(const SemiflowModel& model, double t, const ModeVec& x,
                                                 const WienerPath& path);
std::pair<ModeVec, Eigen::MatrixXd> tangent_eval_steps(const SemiflowModel& model, std::int64_t steps,
                                                       const ModeVec& x, const WienerPath& path);

// Z(t, z, omega) = U(t, z + Y(omega), omega) - Y(theta_t omega).
ModeVec centered_eval(const SemiflowModel& model, const StationaryPoint& y, double t, const ModeVec& z,
                      const WienerPath& path);

// Zhat(t, z, omega) = U(t, z + Y(theta_{-t} omega), theta_{-t} omega) - Y(omega),
// which equals Z(t, z, theta_{-t} omega).
ModeVec backward_centered_eval(const SemiflowModel& model, const StationaryPoint& y, double t, const ModeVec& z,
                               const WienerPath& path);

// D Zhat(t, 0, omega) = DU(t, Y(theta_{-t} omega), theta_{-t} omega).
Eigen::MatrixXd backward_centered_jacobian(const SemiflowModel& model, const StationaryPoint& y, double t,
                                           const WienerPath& path);

}  // namespace rdskit
