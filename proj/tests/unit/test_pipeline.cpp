#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "rdskit/config.hpp"
#include "rdskit/error.hpp"
#include "rdskit/pipeline.hpp"

using namespace rdskit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "rdskit-test-XXXXXX").string();
    path = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

RunOptions into(const std::string& dir) {
  RunOptions o;
  o.out_dir = dir;
  return o;
}

}  // namespace

TEST_CASE("SHA-256 known answers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("error codes map to exit statuses") {
  CHECK(exit_status_for(ErrorCode::config_invalid) == exit_config_error);
  CHECK(exit_status_for(ErrorCode::not_hyperbolic) == exit_not_hyperbolic);
  CHECK(exit_status_for(ErrorCode::no_convergence) == exit_stage_failure);
  CHECK(exit_status_for(ErrorCode::io_error) == exit_stage_failure);
}

TEST_CASE("a full run writes a manifest whose hashes match the files") {
  TempDir tmp;
  const RunResult r = run_pipeline(preset_config("ou-linear"), into(tmp.sub("ou")));
  REQUIRE(r.exit_code == exit_ok);
  CHECK(r.status == "ok");
  CHECK(r.summary.size() == 4);
  const nlohmann::json m = read_json(fs::path(r.out_dir) / "manifest.json");
  CHECK(m["status"] == "ok");
  CHECK(m["exit_code"] == 0);
  CHECK(m["seed"] == 1);
  CHECK(m["config_sha256"] == sha256_file((fs::path(r.out_dir) / "config.txt").string()));
  // The result also names the manifest itself, which cannot hash itself.
  REQUIRE(m["artifacts"].size() + 1 == r.artifacts.size());
  CHECK(r.artifacts.back() == "manifest.json");
  for (const auto& a : m["artifacts"]) {
    const fs::path f = fs::path(r.out_dir) / a["file"].get<std::string>();
    REQUIRE(fs::exists(f));
    CHECK(a["sha256"] == sha256_file(f.string()));
    CHECK(a["bytes"] == fs::file_size(f));
  }
  CHECK_FALSE(fs::exists(fs::path(r.out_dir) / ".rdskit.lock"));

  const nlohmann::json spec = read_json(fs::path(r.out_dir) / "spectrum.json");
  CHECK(spec["exponents"][0].get<double>() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(spec["exponents"][2].get<double>() == doctest::Approx(-9.0).epsilon(1e-9));

  // The recorded config reproduces the run.
  const ExperimentConfig recorded = load_config((fs::path(r.out_dir) / "config.txt").string());
  const RunResult again = run_pipeline(recorded, into(tmp.sub("ou-again")));
  CHECK(again.exit_code == exit_ok);
  std::ifstream a(fs::path(r.out_dir) / "manifest.json"), b(fs::path(again.out_dir) / "manifest.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("seed override changes the noise and the manifest") {
  TempDir tmp;
  RunOptions o = into(tmp.sub("a"));
  ExperimentConfig c = preset_config("ou-linear");
  c.pipeline.stages = {"simulate"};
  const RunResult one = run_pipeline(c, o);
  o.out_dir = tmp.sub("b");
  o.seed = 99;
  const RunResult two = run_pipeline(c, o);
  REQUIRE(one.exit_code == 0);
  REQUIRE(two.exit_code == 0);
  CHECK(read_json(fs::path(two.out_dir) / "manifest.json")["seed"] == 99);
  CHECK(sha256_file(one.out_dir + "/trajectory.bin") != sha256_file(two.out_dir + "/trajectory.bin"));
}

TEST_CASE("a non-hyperbolic model stops at the manifold stage and keeps earlier artifacts") {
  TempDir tmp;
  ExperimentConfig c = preset_config("ou-linear");
  c.op.eigenvalues = {0.0005, 1.0, 2.0};
  c.pipeline.lyapunov_horizon = 20;
  const RunResult r = run_pipeline(c, into(tmp.sub("nh")));
  CHECK(r.exit_code == exit_not_hyperbolic);
  CHECK(r.status.find("manifolds") != std::string::npos);
  CHECK(fs::exists(fs::path(r.out_dir) / "spectrum.json"));
  CHECK_FALSE(fs::exists(fs::path(r.out_dir) / "manifolds.json"));
  const nlohmann::json m = read_json(fs::path(r.out_dir) / "manifest.json");
  CHECK(m["exit_code"] == exit_not_hyperbolic);
  CHECK(m["status"] != "ok");
}

TEST_CASE("invalid configs and locked directories") {
  TempDir tmp;
  ExperimentConfig c = preset_config("gbm");
  c.noise.step = 0.02;
  const RunResult bad = run_pipeline(c, into(tmp.sub("bad")));
  CHECK(bad.exit_code == exit_config_error);
  CHECK(bad.status.find("differs from stepper h") != std::string::npos);

  fs::create_directories(tmp.sub("locked"));
  std::ofstream(tmp.sub("locked") + "/.rdskit.lock") << "held";
  const RunResult locked = run_pipeline(preset_config("gbm"), into(tmp.sub("locked")));
  CHECK(locked.exit_code == exit_stage_failure);
  CHECK(locked.status.find("locked") != std::string::npos);
}

TEST_CASE("output formats filter the artifacts") {
  TempDir tmp;
  ExperimentConfig c = preset_config("gbm");
  c.output.formats = {"json"};
  const RunResult r = run_pipeline(c, into(tmp.sub("json-only")));
  REQUIRE(r.exit_code == 0);
  for (const auto& f : r.artifacts) {
    if (f != "config.txt") CHECK(fs::path(f).extension() == ".json");
  }
}

TEST_CASE("verify passes on presets and fails on an impossible tolerance") {
  for (const char* name : {"contraction", "ou-linear", "gbm"}) {
    CAPTURE(name);
    const VerifyResult v = verify_suite(preset_config(name));
    CHECK(v.passed());
  }
  ExperimentConfig c = preset_config("contraction");
  c.verify.cocycle_tol = 1e-30;
  const VerifyResult v = verify_suite(c);
  CHECK_FALSE(v.passed());
  bool cocycle_failed = false;
  for (const auto& check : v.checks) cocycle_failed |= check.name == "cocycle_law" && !check.passed;
  CHECK(cocycle_failed);
  CHECK(format_verify_table(v).find("FAIL") != std::string::npos);
}

TEST_CASE("inspect renders every artifact kind") {
  TempDir tmp;
  const RunResult r = run_pipeline(preset_config("ou-linear"), into(tmp.sub("ou")));
  REQUIRE(r.exit_code == 0);
  const std::string d = r.out_dir + "/";
  CHECK(inspect_artifact(d + "spectrum.json").find("\"exponents\"") != std::string::npos);
  CHECK(inspect_artifact(d + "trajectory.csv", 3).find("more rows") != std::string::npos);
  CHECK(inspect_artifact(d + "trajectory.bin").find("states") != std::string::npos);
  CHECK(inspect_artifact(d + "noise_path.bin").find("seed") != std::string::npos);
  CHECK(inspect_artifact(d + "stationary.bin").find("method") != std::string::npos);
  CHECK(inspect_artifact(d + "config.txt").find("[operator]") != std::string::npos);
  CHECK_THROWS_AS(inspect_artifact(d + "missing.json"), Error);
}

#ifdef RDSKIT_CLI_PATH
TEST_CASE("command-line exit codes") {
  TempDir tmp;
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(RDSKIT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("presets") == 0);
  CHECK(run("presets --show gbm") == 0);
  CHECK(run("run --preset gbm --out " + tmp.sub("cli")) == 0);
  CHECK(run("inspect " + tmp.sub("cli") + "/manifest.json") == 0);
  CHECK(run("run --preset no-such-preset") == 2);
  CHECK(run("run") == 2);
  CHECK(run("run --bogus-flag") == 2);
  CHECK(run("verify --preset contraction") == 0);

  const std::string cfg = tmp.sub("bad.cfg");
  std::ofstream(cfg) << "[stepper]\nh = -1\n";
  CHECK(run("run --config " + cfg) == 2);
}
#endif
