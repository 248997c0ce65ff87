#include "superheat/rescaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

// Boost 1.74's pchip.hpp calls unqualified isnan.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "superheat/error.hpp"
#include "superheat/io.hpp"

namespace superheat {

double GqPair::g(double eta) const {
  if (q == 1.0) return std::exp(eta);
  return std::pow(eta, q / (q - 1));
}

double GqPair::G(double eta) const {
  if (q == 1.0) return std::exp(-eta);
  return (q - 1) * std::pow(eta, -1.0 / (q - 1));
}

double GqPair::G_inverse(double v) const {
  if (q == 1.0) return -std::log(v);
  return std::pow((q - 1) / v, q - 1);
}

GqPair g_G_pair(double q) {
  if (!(q >= 1.0)) fail(ErrorCode::domain, "the pair (g_q, G_q) needs q >= 1");
  return GqPair{q};
}

std::size_t RescaledProfile::tau_index(double t) const {
  auto it = std::find(tau.begin(), tau.end(), t);
  if (it == tau.end()) fail(ErrorCode::window_out_of_range, "tau not on the grid");
  return static_cast<std::size_t>(it - tau.begin());
}

// ---------------------------------------------------------------------------

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

struct RunInterpolant::Impl {
  const RunRecord* run = nullptr;
  std::size_t count = 0;  // trusted snapshots
  std::vector<double> r;
  mutable std::mutex mu;
  mutable std::vector<std::unique_ptr<Pchip>> cache;

  const Pchip& at(std::size_t i) const {
    std::lock_guard<std::mutex> lock(mu);
    if (!cache[i]) {
      auto x = r;
      auto y = run->snapshots[i].U;
      cache[i] = std::make_unique<Pchip>(std::move(x), std::move(y));
    }
    return *cache[i];
  }
};

RunInterpolant::RunInterpolant(const RunRecord& run) : impl_(std::make_unique<Impl>()) {
  impl_->run = &run;
  impl_->count = std::max<std::size_t>(run.trusted_count(), 1);
  if (run.snapshots.empty()) fail(ErrorCode::window_out_of_range, "run has no snapshots");
  int M = run.grid.M;
  impl_->r.resize(M + 1);
  for (int j = 0; j <= M; ++j) impl_->r[j] = run.grid.r(j);
  impl_->r.back() = run.grid.R;
  impl_->cache.resize(impl_->count);
}

RunInterpolant::~RunInterpolant() = default;
RunInterpolant::RunInterpolant(RunInterpolant&&) noexcept = default;

double RunInterpolant::t_min() const { return impl_->run->snapshots.front().t; }
double RunInterpolant::t_max() const { return impl_->run->snapshots[impl_->count - 1].t; }

double RunInterpolant::value(double r, double t) const {
  const auto& S = impl_->run->snapshots;
  std::size_t n = impl_->count;
  if (t < S.front().t || t > S[n - 1].t)
    fail(ErrorCode::window_out_of_range,
         "time " + io::format_double(t) + " outside the trusted snapshot window");
  if (r < 0 || r > impl_->run->grid.R)
    fail(ErrorCode::window_out_of_range, "radius outside [0, R]");
  auto it = std::upper_bound(S.begin(), S.begin() + n, t,
                             [](double v, const Snapshot& s) { return v < s.t; });
  std::size_t k = static_cast<std::size_t>(it - S.begin());
  if (k == 0) k = 1;
  if (k >= n) {
    if (S[n - 1].t == t) return impl_->at(n - 1)(r);
    k = n - 1;
  }
  const auto& s0 = S[k - 1];
  const auto& s1 = S[k];
  double a = impl_->at(k - 1)(r);
  if (t == s0.t) return a;
  double b = impl_->at(k)(r);
  double th = (t - s0.t) / (s1.t - s0.t);
  return a + th * (b - a);
}

double time_at_F_level(const RunRecord& run, double level) {
  const auto& S = run.snapshots;
  std::size_t n = run.trusted_count();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double F0 = S[i].F_of_M, F1 = S[i + 1].F_of_M;
    if (!std::isfinite(F0) || !std::isfinite(F1)) continue;
    if (F0 == level) return S[i].t;
    if (F0 > level && F1 <= level) {
      double th = std::log(F0 / level) / std::log(F0 / F1);
      return S[i].t + th * (S[i + 1].t - S[i].t);
    }
  }
  fail(ErrorCode::window_out_of_range,
       "F(M) never reaches " + io::format_double(level) + " inside the trusted window");
}

namespace {

double F_at(const Nonlinearity& nl, double u) { return eval_F(nl, u, 1e-11); }

// lambda(t)^2 from the center values of the bracketing snapshots, linear in t.
// F(u(0, t)) is close to affine in t near blow-up, so this avoids the bias of
// interpolating u itself.
double lambda2_at(const RunRecord& run, const Nonlinearity& nl, double t) {
  const auto& S = run.snapshots;
  std::size_t n = run.trusted_count();
  if (n == 0 || t < S.front().t || t > S[n - 1].t)
    fail(ErrorCode::window_out_of_range,
         "time " + io::format_double(t) + " outside the trusted snapshot window");
  auto it = std::upper_bound(S.begin(), S.begin() + n, t,
                             [](double x, const Snapshot& s) { return x < s.t; });
  std::size_t k = std::min<std::size_t>(it - S.begin(), n - 1);
  if (k == 0) return F_at(nl, S[0].U[0]);
  const auto& s0 = S[k - 1];
  const auto& s1 = S[k];
  double a = F_at(nl, s0.U[0]);
  if (t == s0.t) return a;
  double b = F_at(nl, s1.U[0]);
  return a + (t - s0.t) / (s1.t - s0.t) * (b - a);
}

}  // namespace

RescaledProfile build_rescaled(const RunRecord& run, const Nonlinearity& nl, double t_i,
                               double y_max, double tau_max, int ny, int ntau) {
  if (ny < 3 || ntau < 3 || ntau % 2 == 0)
    fail(ErrorCode::domain, "rescaled grid needs ny >= 3 and an odd ntau >= 3");
  RunInterpolant ui(run);
  Nonlinearity f0 = nl.companion();
  RescaledProfile rp;
  rp.t_i = t_i;
  rp.N = run.grid.N;
  rp.q = nl.q_analytic() ? *nl.q_analytic() : estimate_q(nl).q;
  GqPair gq = g_G_pair(rp.q);

  rp.lambda2 = F_at(nl, ui.center(t_i));
  rp.lambda = std::sqrt(rp.lambda2);
  double h = run.grid.h();
  if (rp.lambda < 5 * h)
    fail(ErrorCode::resolution_exhausted,
         "lambda = " + io::format_double(rp.lambda) + " is below 5 grid cells");
  if (rp.lambda * y_max > run.grid.R)
    fail(ErrorCode::window_out_of_range, "lambda * y_max exceeds R");
  double ta = t_i - rp.lambda2 * tau_max, tb = t_i + rp.lambda2 * tau_max;
  if (ta < ui.t_min() || tb > ui.t_max())
    fail(ErrorCode::window_out_of_range, "rescaled time window leaves the trusted run window");

  for (int j = 0; j < ny; ++j) rp.y.push_back(y_max * j / (ny - 1));
  for (int i = 0; i < ntau; ++i) {
    int m = i - (ntau - 1) / 2;
    rp.tau.push_back(tau_max * m / ((ntau - 1) / 2));
  }
  rp.v.assign(ntau, std::vector<double>(ny));
  rp.w.assign(ntau, std::vector<double>(ny));
  for (int i = 0; i < ntau; ++i) {
    double t = rp.tau[i] == 0.0 ? t_i : t_i + rp.lambda2 * rp.tau[i];
    for (int j = 0; j < ny; ++j) {
      double u = ui.value(rp.lambda * rp.y[j], t);
      rp.v[i][j] = F_at(nl, u) / rp.lambda2;
      rp.w[i][j] = gq.G_inverse(F_at(f0, u) / rp.lambda2);
    }
  }
  return rp;
}

LambdaRatioReport check_lambda_ratio(const RunRecord& run, const Nonlinearity& nl, double t,
                                     const std::vector<double>& tau_samples) {
  double l2 = lambda2_at(run, nl, t);
  LambdaRatioReport rep;
  for (double tau : tau_samples) {
    double ratio = tau == 0.0 ? 1.0 : lambda2_at(run, nl, t + l2 * tau) / l2;
    double a = std::fabs(tau);
    double eps = std::max({0.0, (1 - a) - ratio, ratio - (1 + a)});
    rep.worst_eps = std::max(rep.worst_eps, eps);
    rep.tau.push_back(tau);
    rep.ratio.push_back(ratio);
  }
  return rep;
}

VtBounds check_vt_bounds(const RescaledProfile& rp, double rho0, double tau0) {
  const double sl = 1e-12;
  if (rp.y.back() < rho0 - sl || rp.tau.back() < tau0 - sl || rp.tau.front() > -tau0 + sl)
    fail(ErrorCode::window_out_of_range, "rescaled profile does not cover the requested window");
  VtBounds b;
  b.min_v = std::numeric_limits<double>::infinity();
  b.max_v = -b.min_v;
  double dy = rp.y[1] - rp.y[0];
  std::size_t ny = rp.y.size();
  for (std::size_t i = 0; i < rp.tau.size(); ++i) {
    if (std::fabs(rp.tau[i]) > tau0 + sl) continue;
    for (std::size_t j = 0; j < ny; ++j) {
      if (rp.y[j] > rho0 + sl) break;
      double v = rp.v[i][j];
      b.min_v = std::min(b.min_v, v);
      b.max_v = std::max(b.max_v, v);
      double g;
      if (j == 0) g = 0.0;  // radial symmetry
      else if (j + 1 < ny) g = (rp.v[i][j + 1] - rp.v[i][j - 1]) / (2 * dy);
      else g = (rp.v[i][j] - rp.v[i][j - 1]) / dy;
      b.max_grad = std::max(b.max_grad, std::fabs(g));
    }
  }
  return b;
}

CenterRatioReport check_ratio_u_center(const RunRecord& run, const Nonlinearity& nl, double q,
                                       double t, double rho0, double tau0, double eps) {
  RunInterpolant ui(run);
  double l2 = F_at(nl, ui.center(t));
  double lam = std::sqrt(l2);
  if (lam * rho0 > run.grid.R) fail(ErrorCode::window_out_of_range, "lambda * rho0 exceeds R");
  CenterRatioReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  constexpr int ny = 41, nt = 21;
  for (int i = 0; i < nt; ++i) {
    double tau = -tau0 + 2 * tau0 * i / (nt - 1);
    double ts = t + l2 * tau;
    double c = ui.center(ts);
    for (int j = 0; j < ny; ++j) {
      double y = rho0 * j / (ny - 1);
      double ratio = j == 0 ? 1.0 : ui.value(lam * y, ts) / c;
      rep.min_ratio = std::min(rep.min_ratio, ratio);
    }
  }
  rep.bound = 1 - 2 * (q - 1) * rho0 * rho0 / (1 - tau0) - eps;
  rep.satisfied = rep.min_ratio >= rep.bound;
  return rep;
}

double rescaled_equation_residual(const RescaledProfile& rp, double rho, double tau0) {
  GqPair gq = g_G_pair(rp.q);
  double dy = rp.y[1] - rp.y[0];
  double dt = rp.tau[1] - rp.tau[0];
  std::size_t ny = rp.y.size();
  double worst = 0.0;
  const auto& w = rp.w;
  for (std::size_t i = 1; i + 1 < rp.tau.size(); ++i) {
    if (std::fabs(rp.tau[i]) > tau0 + 1e-12) continue;
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      if (rp.y[j] > rho + 1e-12) break;
      double wt = (w[i + 1][j] - w[i - 1][j]) / (2 * dt);
      double lap;
      if (j == 0) {
        lap = rp.N * 2 * (w[i][1] - w[i][0]) / (dy * dy);
      } else {
        double wyy = (w[i][j + 1] - 2 * w[i][j] + w[i][j - 1]) / (dy * dy);
        double wy = (w[i][j + 1] - w[i][j - 1]) / (2 * dy);
        lap = wyy + (rp.N - 1) / rp.y[j] * wy;
      }
      double g = gq.g(w[i][j]);
      worst = std::max(worst, std::fabs(wt - lap - g) / std::max(1.0, std::fabs(g)));
    }
  }
  return worst;
}

std::string render_rescaled_csv(const RescaledProfile& rp) {
  io::CsvTable t;
  t.comments = {"t_i=" + io::format_double(rp.t_i), "lambda=" + io::format_double(rp.lambda),
                "q=" + io::format_double(rp.q), "N=" + std::to_string(rp.N)};
  t.header = {"y", "tau", "v", "w"};
  for (std::size_t i = 0; i < rp.tau.size(); ++i)
    for (std::size_t j = 0; j < rp.y.size(); ++j)
      t.rows.push_back({rp.y[j], rp.tau[i], rp.v[i][j], rp.w[i][j]});
  return io::render_csv(t);
}

}  // namespace superheat
