#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rdskit/config.hpp"
#include "rdskit/error.hpp"
#include "rdskit/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  auto* config = cmd->add_option("--config", f.config_path, "Experiment config file")->check(CLI::ExistingFile);
  auto* preset = cmd->add_option("--preset", f.preset, "Built-in preset name (see `rdskit presets`)");
  config->excludes(preset);
  cmd->add_option("--seed", f.seed, "Override [run] seed");
  cmd->add_option("--out", f.out, "Override [output] directory");
  cmd->add_option("--threads", f.threads, "Worker threads for independent samples")->check(CLI::PositiveNumber);
}

rdskit::ExperimentConfig load(const CommonFlags& f, const std::string& fallback_preset) {
  if (!f.config_path.empty()) return rdskit::load_config(f.config_path);
  return rdskit::preset_config(f.preset.empty() ? fallback_preset : f.preset);
}

rdskit::RunOptions options_from(const CommonFlags& f) {
  rdskit::RunOptions o;
  o.seed = f.seed;
  o.out_dir = f.out;
  o.threads = f.threads;
  o.log = &std::cerr;
  return o;
}

int cmd_run(const CommonFlags& f) {
  if (f.config_path.empty() && f.preset.empty()) {
    std::cerr << "run: one of --config or --preset is required\n";
    return rdskit::exit_config_error;
  }
  const rdskit::RunResult r = rdskit::run_pipeline(load(f, ""), options_from(f));
  for (const auto& line : r.summary) std::cout << line << "\n";
  if (!r.out_dir.empty()) std::cout << "artifacts: " << r.out_dir << " (" << r.artifacts.size() << " files)\n";
  if (r.exit_code != rdskit::exit_ok) std::cerr << "error: " << r.status << "\n";
  return r.exit_code;
}

int cmd_verify(const CommonFlags& f) {
  const rdskit::VerifyResult r = rdskit::verify_suite(load(f, "contraction"), options_from(f));
  std::cout << rdskit::format_verify_table(r);
  return r.passed() ? rdskit::exit_ok : rdskit::exit_stage_failure;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    std::cout << rdskit::find_preset(show).text;
    return rdskit::exit_ok;
  }
  for (const auto& p : rdskit::presets()) std::cout << p.name << "\t" << p.description << "\n";
  return rdskit::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random dynamical systems toolkit: stationary points, Lyapunov spectra, local manifolds"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Run the configured pipeline stages and write artifacts");
  add_common(run, run_flags);

  CommonFlags verify_flags;
  auto* verify = app.add_subcommand("verify", "Run the invariant battery (defaults to the contraction preset)");
  add_common(verify, verify_flags);

  std::string show;
  auto* list = app.add_subcommand("presets", "List built-in presets");
  list->add_option("--show", show, "Print the config text of one preset");

  std::string artifact;
  int rows = 10;
  auto* inspect = app.add_subcommand("inspect", "Pretty-print an artifact (JSON, CSV, binary snapshot, config)");
  inspect->add_option("path", artifact, "Artifact file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--rows", rows, "CSV rows to show");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rdskit::exit_config_error;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (verify->parsed()) return cmd_verify(verify_flags);
    if (list->parsed()) return cmd_presets(show);
    if (inspect->parsed()) {
      std::cout << rdskit::inspect_artifact(artifact, rows);
      return rdskit::exit_ok;
    }
  } catch (const rdskit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rdskit::exit_status_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rdskit::exit_stage_failure;
  }
  return rdskit::exit_ok;
}
