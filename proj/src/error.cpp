#include "superheat/error.hpp"

namespace superheat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::divergent_integral: return "divergent_integral";
    case ErrorCode::bracket_failure: return "bracket_failure";
    case ErrorCode::overflow: return "overflow";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::stability: return "stability";
    case ErrorCode::interpolation_range: return "interpolation_range";
    case ErrorCode::step_underflow: return "step_underflow";
    case ErrorCode::insufficient_overlap: return "insufficient_overlap";
    case ErrorCode::degenerate_profile: return "degenerate_profile";
    case ErrorCode::discretization_fault: return "discretization_fault";
    case ErrorCode::fit_degenerate: return "fit_degenerate";
    case ErrorCode::resolution_exhausted: return "resolution_exhausted";
    case ErrorCode::window_out_of_range: return "window_out_of_range";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error:
    case ErrorCode::io_error:
      return 2;
    case ErrorCode::resolution_exhausted:
      return 4;
    default:
      return 3;
  }
}

}  // namespace superheat
