#include <random>
#include <string>

#include <doctest.h>

#include "rdskit/config.hpp"
#include "rdskit/error.hpp"
#include "rdskit/pipeline.hpp"

using namespace rdskit;

namespace {

std::string error_of(const std::string& text, bool validate = false) {
  try {
    const ExperimentConfig c = parse_config(text);
    if (validate) validate_config(c);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_invalid);
    return e.what();
  }
  return "";
}

const char* const kMinimal = R"([operator]
eigenvalues = -1, 2

[noise]
coupling = additive
sigma = 1, 1
step = 0.01

[stepper]
h = 0.01
)";

}  // namespace

TEST_CASE("every preset validates, builds and round-trips") {
  for (const auto& p : presets()) {
    CAPTURE(p.name);
    const ExperimentConfig c = preset_config(p.name);
    CHECK_NOTHROW(validate_config(c));
    CHECK_NOTHROW(build_model(c));
    const ExperimentConfig again = parse_config(serialize_config(c));
    CHECK(again == c);
    CHECK(serialize_config(again) == serialize_config(c));
  }
}

TEST_CASE("randomized values survive serialization exactly") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> small(1, 50);
  for (int trial = 0; trial < 200; ++trial) {
    ExperimentConfig c = preset_config("contraction");
    c.op.eigenvalues = {-std::exp(3 * u(rng)), std::exp(3 * u(rng))};
    c.nonlinearity.matrix = {{u(rng), u(rng)}, {u(rng) * 1e-7, u(rng) * 1e9}};
    c.nonlinearity.offset = {u(rng), 1.0 / 3.0};
    c.noise.sigma = {std::abs(u(rng)), 0.1 + 0.2};
    c.stepper.h = std::ldexp(1.0, -small(rng));
    c.noise.step = c.stepper.h;
    c.run.seed = rng();
    c.run.tol = std::pow(10.0, -small(rng) / 3.0);
    c.pipeline.invariance_times = {0.0, std::abs(u(rng)), 2.0};
    c.pipeline.rho1 = std::abs(u(rng));
    if (trial % 2) c.pipeline.delta1.reset();
    c.pipeline.stages = {"stationary"};
    c.output.formats = {"json"};
    c.verify.samples = small(rng);
    const ExperimentConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
  }
}

TEST_CASE("parse errors carry the line number") {
  CHECK(error_of("[operator]\neigenvalues = 1, 2\n[bogus]\n").find("line 3: unknown section [bogus]") !=
        std::string::npos);
  CHECK(error_of("[run]\n\nseeds = 4\n").find("line 3: unknown key 'seeds' in [run]") != std::string::npos);
  CHECK(error_of("[run]\ntol = 1e-3\ntol = 1e-4\n").find("line 3: duplicate key 'tol'") != std::string::npos);
  CHECK(error_of("[stepper]\nh = fast\n").find("line 2: [stepper] h") != std::string::npos);
  CHECK(error_of("[run]\nseed = -3\n").find("line 2") != std::string::npos);
  CHECK(error_of("h = 0.1\n").find("line 1: key outside of any section") != std::string::npos);
  CHECK(error_of("[run\n").find("line 1: unterminated") != std::string::npos);
  CHECK(error_of("[run]\njust words\n").find("line 2: expected 'key = value'") != std::string::npos);
}

TEST_CASE("comments and blank lines are ignored") {
  const ExperimentConfig c = parse_config(std::string("# header\n; also a comment\n\n") + kMinimal);
  CHECK(c.op.eigenvalues == std::vector<double>{-1.0, 2.0});
  CHECK(c.lines.at("stepper.h") == 13);
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("semantic validation points at the offending key") {
  std::string text = kMinimal;
  text.replace(text.find("step = 0.01"), 11, "step = 0.02");
  const std::string msg = error_of(text, true);
  CHECK(msg.find("line 7") != std::string::npos);
  CHECK(msg.find("noise grid step 0.02 differs from stepper h 0.01") != std::string::npos);

  CHECK(error_of("[operator]\neigenvalues = 2, 1\n", true).find("line 2: [operator] eigenvalues: must be non-decreasing") !=
        std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "[pipeline]\nstages = manifolds\n", true).find("manifolds requires") !=
        std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "[nonlinearity]\nkind = burgers\n", true).find("dirichlet_interval") !=
        std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "[run]\nwindow = 0.015\n", true).find("not a multiple of h") !=
        std::string::npos);
  std::string mult = kMinimal;
  mult.replace(mult.find("coupling = additive"), 19, "coupling = multiplicative");
  mult.replace(mult.find("sigma = 1, 1"), 12, "sigma = 1");
  CHECK(error_of(mult, true).find("one sigma per mode") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "[output]\nformats = json, xml\n", true).find("xml") != std::string::npos);
}

TEST_CASE("models built from config match the declared operator and noise") {
  const SemiflowModel m = build_model(preset_config("burgers-highnu"));
  CHECK(m.dim() == 32);
  CHECK(m.h() == 0.001);
  CHECK(m.coupling() == NoiseCoupling::additive);
  CHECK(m.covariance().sigma[1] == doctest::Approx(0.5 / 4.0));
  const SemiflowModel s = build_model(preset_config("saddle-oracle"));
  CHECK(s.coupling() == NoiseCoupling::none);
  const Eigen::VectorXd u = (Eigen::VectorXd(2) << 0.3, -0.2).finished();
  CHECK(s.evaluator().eval(u)[0] == doctest::Approx(0.04));
  CHECK(s.evaluator().eval(u)[1] == 0.0);
}
