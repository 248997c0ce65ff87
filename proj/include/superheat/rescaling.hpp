#pragma once

#include <memory>
#include <string>
#include <vector>

#include "superheat/nonlinearity.hpp"
#include "superheat/radial_pde.hpp"

namespace superheat {

// q = 1: g = e^eta, G = e^{-eta}. q > 1: g = eta^{q/(q-1)},
// G = (q-1) eta^{-1/(q-1)}. In both cases G' = -1/g.
struct GqPair {
  double q = 1.0;
  double g(double eta) const;
  double G(double eta) const;
  double G_inverse(double v) const;
};

// domain error for q < 1
GqPair g_G_pair(double q);

// Values on a (tau, y) grid: v[i][j] and w[i][j] at tau[i], y[j].
struct RescaledProfile {
  double t_i = 0.0;
  double lambda = 0.0;
  double lambda2 = 0.0;  // F(u(0, t_i)), kept unrounded so v(0, 0) = 1 exactly
  double q = 1.0;
  int N = 0;
  std::vector<double> y, tau;
  std::vector<std::vector<double>> v, w;

  std::size_t tau_index(double t) const;  // exact grid match required
};

// Solution value u(r, t) from the snapshots: monotone cubic in r, linear in t.
class RunInterpolant {
 public:
  explicit RunInterpolant(const RunRecord& run);
  ~RunInterpolant();
  RunInterpolant(RunInterpolant&&) noexcept;

  double t_min() const;
  double t_max() const;  // end of the trusted window
  double value(double r, double t) const;
  double center(double t) const { return value(0.0, t); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Time at which the snapshot F(M) series (log-linear between snapshots)
// crosses level; window_out_of_range if it never does inside the trusted window.
double time_at_F_level(const RunRecord& run, double level);

// resolution_exhausted if lambda_i < 5h; window_out_of_range if the rescaled
// window leaves [0, R] x trusted time window.
RescaledProfile build_rescaled(const RunRecord& run, const Nonlinearity& nl, double t_i,
                               double y_max, double tau_max, int ny = 41, int ntau = 21);

struct LambdaRatioReport {
  double worst_eps = 0.0;
  std::vector<double> tau, ratio;
};

// lambda(t + lambda(t)^2 tau)^2 / lambda(t)^2 against 1 -+ |tau|, with lambda^2 taken
// from F(u(0, .)) at the snapshots, linear in t between them.
LambdaRatioReport check_lambda_ratio(const RunRecord& run, const Nonlinearity& nl, double t,
                                     const std::vector<double>& tau_samples);

struct VtBounds {
  double min_v = 0.0, max_v = 0.0, max_grad = 0.0;
};

// Extrema of v over |y| <= rho0, |tau| <= tau0 and of |dv/dy| by differences.
VtBounds check_vt_bounds(const RescaledProfile& rp, double rho0, double tau0);

struct CenterRatioReport {
  double min_ratio = 0.0;
  double bound = 0.0;  // 1 - 2 (q - 1) rho0^2 / (1 - tau0) - eps
  bool satisfied = false;
};

// min over |y| <= rho0, |tau| <= tau0 of u(lambda y, t + lambda^2 tau) / u(0, t + lambda^2 tau).
CenterRatioReport check_ratio_u_center(const RunRecord& run, const Nonlinearity& nl, double q,
                                       double t, double rho0, double tau0, double eps = 0.05);

// max |w_tau - Delta_y w - g_q(w)| / max(1, g_q(w)) over interior nodes with
// |y| <= rho, |tau| <= tau0 (centered differences).
double rescaled_equation_residual(const RescaledProfile& rp, double rho, double tau0);

std::string render_rescaled_csv(const RescaledProfile& rp);

}  // namespace superheat
