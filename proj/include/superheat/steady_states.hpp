#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "superheat/nonlinearity.hpp"
#include "superheat/profile.hpp"

namespace superheat {

// Explicit singular steady states: Phi*_p for f = u^p (N >= 3, p > N/(N-2))
// and Phi*_inf for f = e^u (N >= 3).
double explicit_singular_power(double p, int N, double r);
double explicit_singular_exp(int N, double r);
double explicit_singular_power_derivative(double p, int N, double r);
double explicit_singular_exp_derivative(int N, double r);
// Dispatches on the family; only power and exp are accepted.
double explicit_singular(const Nonlinearity& nl, int N, double r);
RadialProfile explicit_singular_profile(const Nonlinearity& nl, int N,
                                        const std::vector<double>& r_grid);

// Z'' + (N+2-4q) Z' + (2N-4q) Z = 0, Z(0) = 0, Z'(0) = 1, in closed form.
struct KernelZ {
  enum class Branch { distinct_real, double_root, complex_pair };

  double q = 0.0;
  int N = 0;
  double b = 0.0;  // N + 2 - 4q
  double c = 0.0;  // 2N - 4q
  Branch branch = Branch::distinct_real;
  std::complex<double> lambda1, lambda2;
  // |Z| + |Z'| + |Z''| <= beta exp(-alpha s) on s >= 0 (beta found by sampling)
  double alpha = 0.0;
  double beta = 0.0;

  double Z(double s) const;
  double Zp(double s) const;
  double Zpp(double s) const;
};

KernelZ kernel_Z(double q, int N);

struct PicardOptions {
  double s_min = -12.0;
  double s_max = 0.0;
  double ds = 0.02;
  double tol = 1e-10;
  int max_iter = 200;
  double tol_boundary = 0.05;
  // Retries with s_max lowered by log 2 when the iteration fails to contract.
  int max_window_halvings = 8;
  double inverse_tol = 1e-13;
};

// X(s), s = log r, with U*(r) = F0^{-1}(e^{2s - X} / (2N - 4q)).
struct SingularTransform {
  std::vector<double> s, X, X_prime;  // reported window [s_min, s_max]
  double q = 0.0;
  int N = 0;
  int iterations = 0;
  double residual = 0.0;           // final sup |dX| + |dX'|
  double contraction_ratio = 0.0;  // last ratio of successive updates
  std::vector<double> update_history;
  double ds = 0.0;
  double s_min = 0.0, s_max = 0.0;
  int window_halvings = 0;

  // Lower padding that stands in for (-inf, s_min); same spacing.
  std::vector<double> pad_s, pad_X, pad_X_prime;
  double truncation_bound = 0.0;  // bound on the neglected part of the integral at s_min
  double boundary_size = 0.0;     // |X(s_min)| + |X'(s_min)|

  // max over the middle half of the window of |ODE residual| / f(U*)
  double ode_residual = 0.0;
  std::string nonlinearity;
};

SingularTransform picard_singular(const Nonlinearity& nl, double q, int N,
                                  const PicardOptions& opt = {});

// One application of the integral map to an existing transform (same grid).
SingularTransform picard_map(const SingularTransform& st, const Nonlinearity& nl);

// Residual of the steady equation relative to f(U*) at each window node,
// with X'' from centered differences of X'.
std::vector<double> singular_relative_residual(const SingularTransform& st,
                                               const Nonlinearity& nl);

// theta(r) = e^{-X(log r)} - 1 on the window nodes.
std::vector<double> singular_theta(const SingularTransform& st);

RadialProfile transform_to_radial(const SingularTransform& st, const Nonlinearity& nl,
                                  const std::vector<double>& r_grid);

struct RangeExit {
  double r = 0.0;
  int sign = 0;  // -1: value left the admissible range from above (e.g. hit 0)
  std::string reason;
};

struct ShootOptions {
  double tol = 1e-10;
  // Taylor start radius as a fraction of the local length scale.
  double start_fraction = 1e-3;
  long max_steps = 5'000'000;
};

struct ShootResult {
  RadialProfile profile;
  std::optional<RangeExit> exit;
  long steps = 0;
};

// Phi'' + (N-1) Phi'/r + f(Phi) = 0, Phi(0) = alpha, Phi'(0) = 0.
ShootResult shoot_regular(const Nonlinearity& nl, int N, double alpha, double r_max,
                          const ShootOptions& opt = {});

}  // namespace superheat
