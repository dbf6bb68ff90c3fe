#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdskit/semiflow.hpp"

namespace rdskit {

using Matrix = std::vector<std::vector<double>>;

struct OperatorConfig {
  std::string kind = "eigenvalues";  // eigenvalues | dirichlet_interval | dirichlet_box
  std::vector<double> eigenvalues;
  int modes = 0;
  double viscosity = 1.0;
  int box_dim = 2;
  bool operator==(const OperatorConfig&) const = default;
};

struct NonlinearityConfig {
  // zero | linear | tanh_coupling | square_transfer | pointwise_tanh |
  // dissipative_reaction | burgers
  std::string kind = "zero";
  Matrix matrix;
  double gain = 1.0;
  std::vector<double> offset;
  double alpha = 1.0;
  int target = 0;
  int source = 1;
  double coefficient = 1.0;
  bool operator==(const NonlinearityConfig&) const = default;
};

struct NoiseConfig {
  std::string coupling = "none";  // none | additive | multiplicative
  std::vector<double> sigma;
  int power_modes = 0;
  double power_amplitude = 0.0;
  double power_decay = 2.0;
  Matrix b0;
  double tail_bound = 0.0;
  std::optional<double> step;
  bool operator==(const NoiseConfig&) const = default;
};

struct StepperSection {
  double h = 1e-2;
  int collocation = 0;
  double blowup_cap = 1e8;
  bool operator==(const StepperSection&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  double window = 5.0;
  double horizon = 5.0;
  double tol = 1e-8;
  double tail_tol = 1e-8;
  int max_iter = 200;
  bool operator==(const RunConfig&) const = default;
};

struct PipelineConfig {
  std::vector<std::string> stages = {"simulate", "stationary", "spectrum"};
  std::string stationary_method = "auto";  // auto | contraction | pullback | equilibrium
  double simulate_time = 1.0;
  std::vector<double> x0;
  int record_every = 1;
  double pullback_time = 20.0;
  double pullback_tol = 1e-6;
  double lyapunov_horizon = 50.0;
  int reorth_every = 1;
  int lyapunov_count = 0;
  int batches = 20;
  double zero_band = 1e-3;
  double split_initial = 2.0;
  double split_max = 64.0;
  double split_tol = 1e-8;
  double dichotomy_horizon = 20.0;
  int dichotomy_samples = 8;
  std::optional<double> delta1;
  std::optional<double> delta2;
  int n_max = 5;
  double t_back = 10.0;
  int chain_depth = 10;
  int stable_points = 12;
  int unstable_points = 8;
  std::optional<double> rho1;
  std::optional<double> rho2;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<double> eps1;
  std::optional<double> eps2;
  std::vector<double> invariance_times = {0.0, 1.0, 2.0};
  bool operator==(const PipelineConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "rdskit-out";
  std::vector<std::string> formats = {"json", "csv", "binary"};
  bool operator==(const OutputConfig&) const = default;
};

struct VerifyConfig {
  double cocycle_tol = 1e-9;
  double jacobian_tol = 1e-8;
  double fd_tol = 1e-5;
  double shift_tol = 1e-12;
  double contraction_slack = 0.05;
  double sum_rule_tol = 1e-6;
  double sum_rule_horizon = 5.0;
  double max_time = 2.0;
  int samples = 20;
  bool operator==(const VerifyConfig&) const = default;
};

struct ExperimentConfig {
  OperatorConfig op;
  NonlinearityConfig nonlinearity;
  NoiseConfig noise;
  StepperSection stepper;
  RunConfig run;
  PipelineConfig pipeline;
  OutputConfig output;
  VerifyConfig verify;
  // "section.key" -> source line, for diagnostics; not part of the value.
  std::map<std::string, int> lines;

  bool operator==(const ExperimentConfig& o) const {
    return op == o.op && nonlinearity == o.nonlinearity && noise == o.noise && stepper == o.stepper &&
           run == o.run && pipeline == o.pipeline && output == o.output && verify == o.verify;
  }
  bool has_stage(const std::string& name) const;
};

// Parses the [section] key = value format; throws config_invalid with the
// offending line. Does not run semantic validation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

// Semantic checks (positivity, dimensions, grid consistency, stage order).
void validate_config(const ExperimentConfig& config);

OperatorSpec build_operator(const ExperimentConfig& config);
NonlinearitySpec build_nonlinearity(const ExperimentConfig& config, const OperatorSpec& op);
CovarianceSpec build_covariance(const ExperimentConfig& config, int state_dim);
NoiseCoupling build_coupling(const ExperimentConfig& config);
SemiflowModel build_model(const ExperimentConfig& config);

}  // namespace rdskit
