#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace superheat {

enum class ErrorCode {
  domain,
  divergent_integral,
  bracket_failure,
  overflow,
  non_convergence,
  stability,
  interpolation_range,
  step_underflow,
  insufficient_overlap,
  degenerate_profile,
  discretization_fault,
  fit_degenerate,
  resolution_exhausted,
  window_out_of_range,
  config_error,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a failure of this kind (2 config, 3 numerical,
/// 4 resolution exhausted).
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace superheat
