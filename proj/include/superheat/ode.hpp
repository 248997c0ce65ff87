#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace superheat {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_min = 1e-14;  // absolute smallest step before giving up
  double h_max = std::numeric_limits<double>::infinity();
  double safety = 0.9;
};

// Dormand-Prince 5(4) with FSAL and max-norm error control. Stage sums and
// the error norm run through the SIMD kernel table.
class Dopri5 {
 public:
  using Rhs = std::function<void(double t, const double* y, double* dydt)>;
  // Return false to stop integration after an accepted step.
  using Observer = std::function<bool(double t, const std::vector<double>& y,
                                      const std::vector<double>& dydt)>;

  enum class Status { reached, stopped, step_underflow };

  struct StepResult {
    bool accepted = false;
    double error = 0.0;  // scaled error norm, <= 1 on acceptance
    double h_next = 0.0;
  };

  Dopri5(std::size_t n, Rhs rhs, OdeOptions opt = {});

  void reset(double t, const std::vector<double>& y);
  // One attempt with step h (may be negative). State advances only if accepted.
  StepResult try_step(double h);
  Status integrate(double t_end, double h0, const Observer& observer);

  double t() const { return t_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& dydt() const { return k_[0]; }
  const OdeOptions& options() const { return opt_; }

  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }
  long rhs_evaluations() const { return evals_; }

 private:
  std::size_t n_;
  Rhs rhs_;
  OdeOptions opt_;
  double t_ = 0.0;
  std::vector<double> y_, y_new_, stage_, err_;
  std::vector<double> k_[7];
  long accepted_ = 0, rejected_ = 0, evals_ = 0;
};

}  // namespace superheat
