#include <string>
#include <vector>

#include "rdskit/pipeline.hpp"

namespace rdskit {

namespace {

const char* const kOuLinear = R"(# Linear Ornstein-Uhlenbeck system: F = 0, additive noise.
[operator]
kind = eigenvalues
eigenvalues = 1, 4, 9

[nonlinearity]
kind = zero

[noise]
coupling = additive
sigma = 1, 1, 1
step = 0.01

[stepper]
h = 0.01

[run]
seed = 1
window = 5
horizon = 5

[pipeline]
stages = simulate, stationary, spectrum, manifolds
simulate_time = 10
x0 = 1, 1, 1
lyapunov_horizon = 50
split_max = 16
dichotomy_horizon = 10
n_max = 3
t_back = 5
stable_points = 8

[output]
directory = ou-linear-out
)";

const char* const kSaddle = R"(# Deterministic planar saddle dx1 = -x1, dx2 = x2 + x1^2 in mode order
# (unstable mode first). Its stable manifold is x2 = -x1^2 / 3.
[operator]
kind = eigenvalues
eigenvalues = -1, 1

[nonlinearity]
kind = square_transfer
target = 0
source = 1
coefficient = 1

[noise]
coupling = none

[stepper]
h = 0.0001

[run]
seed = 1
window = 1
horizon = 1

[pipeline]
stages = stationary, spectrum, manifolds
stationary_method = equilibrium
lyapunov_horizon = 10
split_initial = 1
split_max = 8
dichotomy_horizon = 5
n_max = 5
t_back = 10
chain_depth = 10
stable_points = 12
unstable_points = 8
rho1 = 0.1
rho2 = 0.1
beta1 = 0.2
beta2 = 0.2
eps1 = 0.5
eps2 = 0.5

[output]
directory = saddle-oracle-out
)";

const char* const kBurgers = R"(# Stochastic Burgers equation on (0, 1), viscosity 1, 32 sine modes.
[operator]
kind = dirichlet_interval
modes = 32
viscosity = 1

[nonlinearity]
kind = burgers

[noise]
coupling = additive
power_modes = 32
power_amplitude = 0.5
power_decay = 2
step = 0.001

[stepper]
h = 0.001

[run]
seed = 1
window = 1
horizon = 1

[pipeline]
stages = simulate, stationary, spectrum
stationary_method = auto
simulate_time = 2
pullback_time = 5
pullback_tol = 1e-8
lyapunov_horizon = 10
lyapunov_count = 4
split_initial = 0.5
split_max = 4
dichotomy_horizon = 2

[output]
directory = burgers-highnu-out
)";

const char* const kContraction = R"(# Two-mode saddle with a bounded tanh coupling: contraction constant 0.4.
[operator]
kind = eigenvalues
eigenvalues = -1, 1

[nonlinearity]
kind = tanh_coupling
matrix = 0.1, 0.1; 0.1, 0.1
gain = 1

[noise]
coupling = additive
sigma = 0.5, 0.5
step = 0.01

[stepper]
h = 0.01

[run]
seed = 1
window = 10
horizon = 10
tol = 1e-10

[pipeline]
stages = stationary, spectrum, manifolds
lyapunov_horizon = 200
split_max = 32
dichotomy_horizon = 20
n_max = 5
t_back = 10

[output]
directory = contraction-out
)";

const char* const kGbm = R"(# Decoupled geometric Brownian motions du_n = -mu_n u_n dt + sigma_n u_n dW_n.
[operator]
kind = eigenvalues
eigenvalues = 1, 2

[nonlinearity]
kind = zero

[noise]
coupling = multiplicative
sigma = 0.5, 1
step = 0.01

[stepper]
h = 0.01

[run]
seed = 1
window = 1
horizon = 1

[pipeline]
stages = stationary, spectrum
stationary_method = equilibrium
lyapunov_horizon = 1000
split_max = 16
dichotomy_horizon = 50

[output]
directory = gbm-out
)";

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = {
      {"contraction", "two-mode saddle with tanh coupling; default for verify", kContraction},
      {"ou-linear", "linear Ornstein-Uhlenbeck system, exponents -1, -4, -9", kOuLinear},
      {"saddle-oracle", "deterministic saddle with stable manifold x2 = -x1^2/3", kSaddle},
      {"burgers-highnu", "stochastic Burgers, 32 modes, pullback stationary point", kBurgers},
      {"gbm", "decoupled geometric Brownian motions, exponents -1.125, -2.5", kGbm},
  };
  return list;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw Error(ErrorCode::config_invalid, "unknown preset '" + name + "' (known: " + known + ")");
}

ExperimentConfig preset_config(const std::string& name) { return parse_config(find_preset(name).text); }

}  // namespace rdskit
