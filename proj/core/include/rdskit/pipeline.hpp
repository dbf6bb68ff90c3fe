#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdskit/config.hpp"
#include "rdskit/error.hpp"

namespace rdskit {

enum ExitStatus : int {
  exit_ok = 0,
  exit_config_error = 2,
  exit_stage_failure = 3,
  exit_not_hyperbolic = 4,
};

int exit_status_for(ErrorCode code);

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides [output] directory
  std::optional<std::uint64_t> seed;   // overrides [run] seed
  int threads = 1;
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = exit_ok;
  std::string status;  // "ok" or the failing stage and its message
  std::string out_dir;
  std::vector<std::string> artifacts;  // file names relative to out_dir, manifest order
  std::vector<std::string> summary;    // one human-readable line per finished stage
};

/// Validates the config, takes the directory lock and runs the requested
/// stages in order. Each stage writes its artifacts before the next starts;
/// manifest.json is written last, also after a failure.
RunResult run_pipeline(ExperimentConfig config, const RunOptions& options = {});

struct VerifyCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

struct VerifyResult {
  std::vector<VerifyCheck> checks;
  bool passed() const;
};

/// Invariant battery: shift group law, cocycle law, Jacobian cocycle law,
/// Jacobian against central differences, contraction ratios and the QR
/// sum rule, each against the threshold from [verify].
VerifyResult verify_suite(ExperimentConfig config, const RunOptions& options = {});
std::string format_verify_table(const VerifyResult& result);

struct Preset {
  std::string name;
  std::string description;
  std::string text;
};

const std::vector<Preset>& presets();
// Throws config_invalid listing the known names.
const Preset& find_preset(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

// Hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Human-readable rendering of a JSON report, CSV series, binary snapshot or
// config file.
std::string inspect_artifact(const std::string& path, int max_rows = 10);

}  // namespace rdskit
