#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdskit {

enum class ErrorCode {
  invalid_argument,
  invalid_grid,
  out_of_window,
  grid_misaligned,
  tail_not_negligible,
  basis_mismatch,
  zero_eigenvalue,
  not_in_minus_subspace,
  blow_up,
  window_exceeded,
  splitting_undefined,
  condition_violated,
  no_convergence,
  quadrature_too_coarse,
  degenerate_r,
  no_subspace_convergence,
  series_too_short,
  degenerate_pairs,
  no_unstable_directions,
  all_seeds_rejected,
  chain_too_short,
  insufficient_samples,
  fit_ill_conditioned,
  unsupported,
  io_error,
  config_invalid,
  stage_failed,
  not_hyperbolic,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rdskit
