#include "rdskit/error.hpp"

namespace rdskit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_grid: return "invalid-grid";
    case ErrorCode::out_of_window: return "out-of-window";
    case ErrorCode::grid_misaligned: return "grid-misaligned";
    case ErrorCode::tail_not_negligible: return "tail-not-negligible";
    case ErrorCode::basis_mismatch: return "basis-mismatch";
    case ErrorCode::zero_eigenvalue: return "zero-eigenvalue";
    case ErrorCode::not_in_minus_subspace: return "not-in-minus-subspace";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::window_exceeded: return "window-exceeded";
    case ErrorCode::splitting_undefined: return "splitting-undefined";
    case ErrorCode::condition_violated: return "condition-violated";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::quadrature_too_coarse: return "quadrature-too-coarse";
    case ErrorCode::degenerate_r: return "degenerate-R";
    case ErrorCode::no_subspace_convergence: return "no-subspace-convergence";
    case ErrorCode::series_too_short: return "series-too-short";
    case ErrorCode::degenerate_pairs: return "degenerate-pairs";
    case ErrorCode::no_unstable_directions: return "no-unstable-directions";
    case ErrorCode::all_seeds_rejected: return "all-seeds-rejected";
    case ErrorCode::chain_too_short: return "chain-too-short";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::fit_ill_conditioned: return "fit-ill-conditioned";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::config_invalid: return "config-invalid";
    case ErrorCode::stage_failed: return "stage-failed";
    case ErrorCode::not_hyperbolic: return "not-hyperbolic";
  }
  return "unknown";
}

}  // namespace rdskit
