#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "superheat/nonlinearity.hpp"
#include "superheat/profile.hpp"

namespace superheat {

// Uniform radial grid r_j = j h, j = 0..M, on [0, R] in dimension N.
struct Grid {
  double R = 1.0;
  int M = 400;
  int N = 3;

  double h() const { return R / M; }
  double r(int j) const { return j * h(); }
  // Throws domain unless M >= 16, R > 0, N >= 1.
  void validate() const;
};

enum class TimeScheme { explicit_rk, implicit_trapezoid };

struct SolverConfig {
  TimeScheme scheme = TimeScheme::explicit_rk;
  // Fraction of the stability step min(h^2 / (2N), 1 / max f'(U)).
  double safety = 0.9;
  double dt_min = 1e-18;
  std::optional<double> M_max;  // default: the family threshold
  double t_horizon = 1.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  // Snapshot cadence in t (0 disables) and per decade of F(M).
  double snapshot_dt = 0.01;
  int snapshots_per_decade = 50;
  // Consecutive snapshots satisfy |dF(M)| <= densify F(M).
  double densify = 0.1;

  bool operator==(const SolverConfig&) const = default;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> U;
  double max_value = 0.0;
  double argmax_r = 0.0;
  double F_of_M = 0.0;  // +inf when F(M) is not finite
};

enum class Termination { horizon, threshold, dt_underflow };

std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);
std::string to_string(TimeScheme s);
TimeScheme scheme_from_string(const std::string& s);

struct RunRecord {
  Grid grid;
  SolverConfig config;
  std::string nonlinearity;
  std::string initial;
  double k = 0.0;
  double M_max = 0.0;
  std::vector<Snapshot> snapshots;
  Termination termination = Termination::horizon;
  long steps = 0;
  long rejected = 0;
  double wall_seconds = 0.0;
  double min_value = 0.0;  // smallest U seen over the run

  // First snapshot time from which the maximum stays at the origin.
  std::optional<double> settle_time;
  // First snapshot time with lambda = F(M)^{1/2} < 5h; ends the trusted window.
  std::optional<double> resolution_time;

  // Snapshots with t < resolution_time (all of them if resolution never ran out).
  std::size_t trusted_count() const;
  // First snapshot index at or after settle_time (size() if never settled).
  std::size_t settled_index() const;
};

// "flat:a=..", "bump:A=..,m=2", "steady:alpha=..", "file:<path>".
struct InitialData {
  std::string spec;
  std::function<double(double)> value;
  std::vector<double> on_grid(const Grid& g) const;
};
InitialData parse_initial_data(const std::string& spec, const Nonlinearity& nl,
                               const Grid& grid);

// Runs the method of lines until the horizon, M >= M_max or dt < dt_min.
// The boundary value k must match u0(R) within 1e-8 (then it is projected).
RunRecord simulate(const Nonlinearity& nl, const Grid& grid, const SolverConfig& config,
                   const InitialData& u0, double k);

// Space-free control: U(., t) = F^{-1}(T - t) on every node, sampled at the
// given times (all < T).
RunRecord synthetic_ode_run(const Nonlinearity& nl, const Grid& grid, double T,
                            const std::vector<double>& times);

struct BlowupTimeFit {
  double T_est = 0.0;
  double a = 0.0, c = 0.0;  // F(M(t)) ~ a - c t
  std::size_t window_begin = 0, window_size = 0;
  double rms = 0.0;
  double lower_bound = 0.0;  // max_t (t + F(M(t)))
  bool consistent = false;   // T_est >= lower_bound - eps
};

// Least squares on the final F(M)-decade. fit_degenerate unless the run hit
// the threshold with >= 6 snapshots in that decade and c > 0.
BlowupTimeFit estimate_blowup_time(const RunRecord& run, double eps = 1e-9);
// The same fit without the termination requirement (used for underflow runs).
BlowupTimeFit fit_final_decade(const RunRecord& run, double eps = 1e-9);

struct GradientBoundReport {
  double max_excess = 0.0;  // max of (|U_r|^2 / 2 - int_U^M f) / (f(M) M), clipped at 0
  double at_t = 0.0, at_r = 0.0;
  std::size_t snapshots_checked = 0;
  // Per checked snapshot: (t, normalized excess).
  std::vector<std::pair<double, double>> series;
};

GradientBoundReport check_gradient_bound(const RunRecord& run, const Nonlinearity& nl);

// Snapshot as a profile on the grid (monotone interpolation, no derivative).
RadialProfile snapshot_profile(const RunRecord& run, std::size_t i);

}  // namespace superheat
