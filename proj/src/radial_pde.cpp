#include "superheat/radial_pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "superheat/error.hpp"
#include "superheat/io.hpp"
#include "superheat/kernels.hpp"
#include "superheat/ode.hpp"
#include "superheat/steady_states.hpp"

namespace superheat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_F(const Nonlinearity& nl, double M) {
  try {
    return eval_F(nl, M, 1e-10);
  } catch (const Error&) {
    return kInf;
  }
}

std::map<std::string, double> parse_params(std::string_view rest, const std::string& spec) {
  std::map<std::string, double> kv;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::config_error, "expected key=value in initial data '" + spec + "'");
    try {
      kv[std::string(item.substr(0, eq))] = io::parse_double(item.substr(eq + 1));
    } catch (const Error&) {
      fail(ErrorCode::config_error, "bad number in initial data '" + spec + "'");
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return kv;
}

struct Frame {
  double M;
  std::size_t argmax;
};

Frame frame(const std::vector<double>& U) {
  auto it = std::max_element(U.begin(), U.end());
  return {*it, static_cast<std::size_t>(it - U.begin())};
}

// Semidiscrete operator: stencil rows plus the reaction term.
class Mol {
 public:
  Mol(const Nonlinearity& nl, const Grid& g) : nl_(nl), g_(g) {
    int M = g.M;
    double h2 = g.h() * g.h();
    lo_.assign(M + 1, 0.0);
    di_.assign(M + 1, 0.0);
    up_.assign(M + 1, 0.0);
    fv_.assign(M + 1, 0.0);
    di_[0] = -2.0 * g.N / h2;
    up_[0] = 2.0 * g.N / h2;
    for (int j = 1; j < M; ++j) {
      double adv = (g.N - 1) / (2.0 * j * h2);
      lo_[j] = 1.0 / h2 - adv;
      di_[j] = -2.0 / h2;
      up_[j] = 1.0 / h2 + adv;
    }
  }

  void operator()(const double* y, double* dy) {
    int M = g_.M;
    // Values below 0 only arise as round-off (checked by the caller); f is
    // evaluated at 0 there so power families stay defined.
    for (int j = 0; j < M; ++j) fv_[j] = nl_.f(std::max(y[j], 0.0));
    dy[0] = di_[0] * y[0] + up_[0] * y[1] + fv_[0];
    kernels::active().stencil(lo_.data(), di_.data(), up_.data(), y, fv_.data(), dy, 1, M);
    dy[M] = 0.0;
  }

  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& di() const { return di_; }
  const std::vector<double>& up() const { return up_; }

 private:
  const Nonlinearity& nl_;
  Grid g_;
  std::vector<double> lo_, di_, up_, fv_;
};

// Crank-Nicolson step with Newton on the tridiagonal Jacobian. Returns false
// if Newton does not converge; U is left untouched then.
bool trapezoid_step(const Nonlinearity& nl, Mol& mol, std::vector<double>& U, double dt,
                    double rtol, double atol) {
  std::size_t n = U.size();
  std::size_t M = n - 1;
  std::vector<double> LU(n), V = U, LV(n), G(n), a(n), bdiag(n), c(n), d(n);
  mol(U.data(), LU.data());
  for (std::size_t i = 0; i < n; ++i) V[i] = U[i] + dt * LU[i];
  const auto& lo = mol.lo();
  const auto& di = mol.di();
  const auto& up = mol.up();
  for (int it = 0; it < 12; ++it) {
    mol(V.data(), LV.data());
    for (std::size_t i = 0; i < M; ++i) G[i] = V[i] - U[i] - 0.5 * dt * (LU[i] + LV[i]);
    G[M] = 0.0;
    // (I - dt/2 J) delta = -G
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = i > 0 && i < M ? -0.5 * dt * lo[i] : 0.0;
      c[i] = i < M ? -0.5 * dt * up[i] : 0.0;
      bdiag[i] = i < M ? 1.0 - 0.5 * dt * (di[i] + nl.f_prime(std::max(V[i], 0.0))) : 1.0;
      d[i] = -G[i];
    }
    for (std::size_t i = 1; i < n; ++i) {
      double w = a[i] / bdiag[i - 1];
      bdiag[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    d[n - 1] /= bdiag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / bdiag[i];
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      V[i] += d[i];
      if (!std::isfinite(V[i])) return false;
      norm = std::max(norm, std::fabs(d[i]) / (atol + rtol * std::fabs(V[i])));
    }
    if (norm <= 1.0) {
      U = V;
      return true;
    }
  }
  return false;
}

}  // namespace

void Grid::validate() const {
  if (!(R > 0) || !std::isfinite(R)) fail(ErrorCode::domain, "grid radius must be positive");
  if (M < 16) fail(ErrorCode::domain, "grid needs at least 16 cells");
  if (N < 1) fail(ErrorCode::domain, "dimension must be at least 1");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::horizon: return "horizon";
    case Termination::threshold: return "threshold";
    case Termination::dt_underflow: return "dt_underflow";
  }
  return "?";
}

Termination termination_from_string(const std::string& s) {
  if (s == "horizon") return Termination::horizon;
  if (s == "threshold") return Termination::threshold;
  if (s == "dt_underflow") return Termination::dt_underflow;
  fail(ErrorCode::config_error, "unknown termination '" + s + "'");
}

std::string to_string(TimeScheme s) {
  return s == TimeScheme::explicit_rk ? "explicit_rk" : "implicit_trapezoid";
}

TimeScheme scheme_from_string(const std::string& s) {
  if (s == "explicit_rk" || s == "explicit") return TimeScheme::explicit_rk;
  if (s == "implicit_trapezoid" || s == "implicit") return TimeScheme::implicit_trapezoid;
  fail(ErrorCode::config_error, "unknown time scheme '" + s + "'");
}

std::size_t RunRecord::trusted_count() const {
  if (!resolution_time) return snapshots.size();
  std::size_t n = 0;
  while (n < snapshots.size() && snapshots[n].t < *resolution_time) ++n;
  return n;
}

std::size_t RunRecord::settled_index() const {
  if (!settle_time) return snapshots.size();
  std::size_t i = 0;
  while (i < snapshots.size() && snapshots[i].t < *settle_time) ++i;
  return i;
}

std::vector<double> InitialData::on_grid(const Grid& g) const {
  std::vector<double> u(g.M + 1);
  for (int j = 0; j <= g.M; ++j) u[j] = value(g.r(j));
  // exact endpoint, not j*h rounding
  u[g.M] = value(g.R);
  return u;
}

InitialData parse_initial_data(const std::string& spec, const Nonlinearity& nl,
                               const Grid& grid) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  InitialData out;
  out.spec = spec;
  if (kind == "file") {
    auto prof = std::make_shared<RadialProfile>(read_profile_csv(rest));
    if (prof->r_min() > 0 || prof->r_max() < grid.R * (1 - 1e-12))
      fail(ErrorCode::config_error, "initial profile must cover [0, R]");
    auto interp = std::make_shared<ProfileInterpolant>(*prof);
    out.value = [interp](double r) { return interp->value(std::min(r, interp->r_max())); };
    return out;
  }
  auto kv = parse_params(rest, spec);
  auto take = [&](const char* key, std::optional<double> dflt = std::nullopt) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (dflt) return *dflt;
      fail(ErrorCode::config_error, "initial data '" + kind + "' needs " + key);
    }
    double v = it->second;
    kv.erase(it);
    return v;
  };
  if (kind == "flat") {
    double a = take("a");
    out.value = [a](double) { return a; };
  } else if (kind == "bump") {
    double A = take("A");
    double m = take("m", 2.0);
    double R = grid.R;
    out.value = [A, m, R](double r) {
      double s = 1.0 - (r / R) * (r / R);
      return s <= 0 ? 0.0 : A * std::pow(s, m);
    };
  } else if (kind == "steady") {
    double alpha = take("alpha");
    ShootOptions so;
    so.tol = 1e-12;
    auto shot = shoot_regular(nl, grid.N, alpha, grid.R, so);
    if (shot.exit)
      fail(ErrorCode::domain, "steady profile leaves its range at r = " +
                                  io::format_double(shot.exit->r) + " before R");
    auto interp = std::make_shared<ProfileInterpolant>(shot.profile);
    out.value = [interp](double r) { return interp->value(std::min(r, interp->r_max())); };
  } else {
    fail(ErrorCode::config_error, "unknown initial data kind '" + kind + "'");
  }
  if (!kv.empty())
    fail(ErrorCode::config_error, "unknown parameter '" + kv.begin()->first +
                                      "' in initial data '" + spec + "'");
  return out;
}

RunRecord simulate(const Nonlinearity& nl, const Grid& grid, const SolverConfig& cfg,
                   const InitialData& u0, double k) {
  auto wall0 = std::chrono::steady_clock::now();
  grid.validate();
  if (!(cfg.dt_min > 0)) fail(ErrorCode::config_error, "dt_min must be positive");
  if (!(cfg.t_horizon > 0)) fail(ErrorCode::config_error, "t_horizon must be positive");
  if (!(cfg.safety > 0 && cfg.safety <= 1)) fail(ErrorCode::config_error, "safety must be in (0, 1]");
  if (k < 0) fail(ErrorCode::domain, "boundary value must be nonnegative");

  RunRecord run;
  run.grid = grid;
  run.config = cfg;
  run.nonlinearity = nl.label();
  run.initial = u0.spec;
  run.k = k;
  run.M_max = cfg.M_max.value_or(nl.default_blowup_threshold());
  if (!(run.M_max < nl.u_cap()))
    fail(ErrorCode::config_error, "M_max lies beyond the representable range of f");

  const int M = grid.M;
  const double h = grid.h();
  std::vector<double> U = u0.on_grid(grid);
  for (double v : U)
    if (!(v >= 0) || !std::isfinite(v)) fail(ErrorCode::domain, "initial data must be finite and nonnegative");
  if (std::fabs(U[M] - k) > 1e-8 * std::max(1.0, std::fabs(k)))
    fail(ErrorCode::domain, "initial data does not match the boundary value k at r = R");
  U[M] = k;
  run.min_value = *std::min_element(U.begin(), U.end());

  // F(M) between refreshes: F(M_c) - (M - M_c) / f(M), first order in the
  // increment. Only step caps and snapshot triggers use the estimate.
  double F_cached = kInf, M_cached = -1.0;
  auto F_of = [&](double Mv, bool exact) {
    if (exact || M_cached < 0 || !std::isfinite(F_cached) ||
        std::fabs(Mv - M_cached) > 0.02 * std::max(1.0, std::fabs(M_cached))) {
      F_cached = safe_F(nl, Mv);
      M_cached = Mv;
      return F_cached;
    }
    double est = F_cached - (Mv - M_cached) / nl.f(0.5 * (Mv + M_cached));
    return est > 0 ? est : safe_F(nl, Mv);
  };

  double last_snapshot_F = kInf;
  const double decade_ratio =
      std::min(std::pow(10.0, 1.0 / std::max(1, cfg.snapshots_per_decade)), 1.0 + 0.5 * cfg.densify);
  auto emit = [&](double t, const std::vector<double>& y) {
    Snapshot s;
    s.t = t;
    s.U = y;
    Frame fr = frame(y);
    s.max_value = fr.M;
    s.argmax_r = grid.r(static_cast<int>(fr.argmax));
    s.F_of_M = F_of(fr.M, true);
    if (!run.resolution_time && std::isfinite(s.F_of_M) && std::sqrt(s.F_of_M) < 5 * h)
      run.resolution_time = t;
    last_snapshot_F = s.F_of_M;
    run.snapshots.push_back(std::move(s));
  };

  Mol mol(nl, grid);
  double t = 0.0;
  emit(t, U);

  auto next_snapshot_time = [&](double tc) {
    if (cfg.snapshot_dt <= 0) return kInf;
    double n = std::floor(tc / cfg.snapshot_dt + 1e-9) + 1;
    return n * cfg.snapshot_dt;
  };

  OdeOptions oo;
  oo.rtol = cfg.rtol;
  oo.atol = cfg.atol;
  std::unique_ptr<Dopri5> ode;
  if (cfg.scheme == TimeScheme::explicit_rk) {
    ode = std::make_unique<Dopri5>(M + 1, [&](double, const double* y, double* dy) { mol(y, dy); }, oo);
    ode->reset(0.0, U);
  }

  const double diffusion_cap = h * h / (2.0 * grid.N);
  double dt_try = cfg.safety * diffusion_cap;
  if (cfg.scheme == TimeScheme::implicit_trapezoid) dt_try = std::min(cfg.t_horizon, 1.0) * 1e-3;
  double t_snap = next_snapshot_time(0.0);
  double neg_floor = 10 * cfg.atol;

  for (;;) {
    const std::vector<double>& y = ode ? ode->y() : U;
    Frame fr = frame(y);
    if (fr.M >= run.M_max) {
      run.termination = Termination::threshold;
      break;
    }
    if (t >= cfg.t_horizon) {
      run.termination = Termination::horizon;
      break;
    }
    double fp_max = 0.0;
    for (int j = 0; j < M; ++j) fp_max = std::max(fp_max, nl.f_prime(std::max(y[j], 0.0)));
    double cap = fp_max > 0 ? 1.0 / fp_max : kInf;
    if (cfg.scheme == TimeScheme::explicit_rk) cap = std::min(cap, diffusion_cap);
    cap *= cfg.safety;
    double Fm = F_of(fr.M, false);
    if (std::isfinite(Fm)) cap = std::min(cap, 0.2 * cfg.densify * Fm);
    double dt = std::min({dt_try, cap, cfg.t_horizon - t});
    bool to_snap = false;
    if (t_snap - t <= dt) {
      dt = t_snap - t;
      to_snap = true;
    }
    if (dt < cfg.dt_min || t + dt == t) {
      run.termination = Termination::dt_underflow;
      break;
    }

    bool ok;
    if (ode) {
      auto res = ode->try_step(dt);
      ok = res.accepted;
      dt_try = res.h_next;
      if (ok) t = ode->t();
    } else {
      ok = trapezoid_step(nl, mol, U, dt, cfg.rtol, cfg.atol);
      dt_try = ok ? dt * 1.5 : dt * 0.5;
      if (ok) t += dt;
    }
    if (!ok) {
      ++run.rejected;
      continue;
    }
    ++run.steps;
    if (to_snap) {
      t = t_snap;  // remove rounding drift in the cadence
      if (ode) ode->reset(t, ode->y());
    }
    const std::vector<double>& yn = ode ? ode->y() : U;
    Frame fn = frame(yn);
    double mn = *std::min_element(yn.begin(), yn.end());
    run.min_value = std::min(run.min_value, mn);
    if (mn < -(1e-6 * std::fabs(fn.M) + neg_floor))
      fail(ErrorCode::discretization_fault,
           "negative value " + io::format_double(mn) + " at t = " + io::format_double(t));
    bool want = to_snap || fn.M >= run.M_max;
    if (!want && std::isfinite(last_snapshot_F)) {
      double Fn = F_of(fn.M, false);
      want = Fn * decade_ratio <= last_snapshot_F;
    }
    if (!want && !std::isfinite(last_snapshot_F)) want = std::isfinite(F_of(fn.M, false));
    if (want) emit(t, yn);
    if (to_snap) t_snap = next_snapshot_time(t);
  }
  if (run.snapshots.back().t != t) emit(t, ode ? ode->y() : U);

  std::size_t last_off = run.snapshots.size();
  for (std::size_t i = 0; i < run.snapshots.size(); ++i)
    if (run.snapshots[i].argmax_r != 0.0) last_off = i;
  if (last_off == run.snapshots.size()) {
    run.settle_time = run.snapshots.front().t;
  } else if (last_off + 1 < run.snapshots.size()) {
    run.settle_time = run.snapshots[last_off + 1].t;
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return run;
}

RunRecord synthetic_ode_run(const Nonlinearity& nl, const Grid& grid, double T,
                            const std::vector<double>& times) {
  grid.validate();
  RunRecord run;
  run.grid = grid;
  run.nonlinearity = nl.label();
  run.initial = "synthetic";
  std::optional<double> guess;
  for (double t : times) {
    if (!(t < T)) fail(ErrorCode::domain, "synthetic run times must precede T");
    if (!run.snapshots.empty() && !(t > run.snapshots.back().t))
      fail(ErrorCode::domain, "synthetic run times must increase");
    double Mv = eval_F_inverse(nl, T - t, 1e-13, guess);
    guess = Mv;
    Snapshot s;
    s.t = t;
    s.U.assign(grid.M + 1, Mv);
    s.max_value = Mv;
    s.argmax_r = 0.0;
    s.F_of_M = T - t;
    run.snapshots.push_back(std::move(s));
  }
  if (run.snapshots.empty()) fail(ErrorCode::domain, "synthetic run needs at least one time");
  run.k = run.snapshots.back().max_value;
  run.M_max = run.k;
  run.min_value = run.snapshots.front().max_value;
  run.termination = Termination::threshold;
  run.settle_time = run.snapshots.front().t;
  return run;
}

BlowupTimeFit estimate_blowup_time(const RunRecord& run, double eps) {
  if (run.termination != Termination::threshold)
    fail(ErrorCode::fit_degenerate, "run did not reach the blow-up threshold");
  return fit_final_decade(run, eps);
}

BlowupTimeFit fit_final_decade(const RunRecord& run, double eps) {
  const auto& S = run.snapshots;
  double F_end = S.back().F_of_M;
  if (!std::isfinite(F_end) || !(F_end > 0))
    fail(ErrorCode::fit_degenerate, "F(M) at the end of the run is not finite");
  std::size_t begin = S.size();
  while (begin > 0 && std::isfinite(S[begin - 1].F_of_M) && S[begin - 1].F_of_M <= 10 * F_end) --begin;
  std::size_t n = S.size() - begin;
  if (n < 6) fail(ErrorCode::fit_degenerate, "fewer than 6 snapshots in the final F(M) decade");

  double tm = 0, Fm = 0;
  for (std::size_t i = begin; i < S.size(); ++i) {
    tm += S[i].t;
    Fm += S[i].F_of_M;
  }
  tm /= n;
  Fm /= n;
  double stt = 0, stF = 0;
  for (std::size_t i = begin; i < S.size(); ++i) {
    stt += (S[i].t - tm) * (S[i].t - tm);
    stF += (S[i].t - tm) * (S[i].F_of_M - Fm);
  }
  if (!(stt > 0)) fail(ErrorCode::fit_degenerate, "final window has no time spread");
  BlowupTimeFit fit;
  fit.c = -stF / stt;
  if (!(fit.c > 0)) fail(ErrorCode::fit_degenerate, "F(M) shows no decreasing trend");
  fit.a = Fm + fit.c * tm;
  fit.T_est = tm + Fm / fit.c;
  fit.window_begin = begin;
  fit.window_size = n;
  double ss = 0;
  for (std::size_t i = begin; i < S.size(); ++i) {
    double r = S[i].F_of_M - (fit.a - fit.c * S[i].t);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  fit.lower_bound = -kInf;
  for (const auto& s : S)
    if (std::isfinite(s.F_of_M)) fit.lower_bound = std::max(fit.lower_bound, s.t + s.F_of_M);
  fit.consistent = fit.T_est >= fit.lower_bound - eps;
  return fit;
}

GradientBoundReport check_gradient_bound(const RunRecord& run, const Nonlinearity& nl) {
  GradientBoundReport rep;
  const double h = run.grid.h();
  const int M = run.grid.M;
  std::vector<std::size_t> order(M + 1);
  std::vector<double> below(M + 1);
  for (std::size_t i = run.settled_index(); i < run.snapshots.size(); ++i) {
    const auto& U = run.snapshots[i].U;
    double Mv = run.snapshots[i].max_value;
    // int_{U_j}^{M} f accumulated over the sorted values
    for (int j = 0; j <= M; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return U[a] > U[b]; });
    double acc = 0.0, prev = Mv;
    for (std::size_t idx : order) {
      if (U[idx] < prev) acc += integrate_f(nl, U[idx], prev);
      prev = std::min(prev, U[idx]);
      below[idx] = acc;
    }
    double norm = nl.f(Mv) * Mv;
    if (!(norm > 0)) norm = 1.0;
    double worst = 0.0, worst_r = 0.0;
    for (int j = 1; j <= M; ++j) {
      double du = j < M ? (U[j + 1] - U[j - 1]) / (2 * h) : (U[M] - U[M - 1]) / h;
      double ex = (0.5 * du * du - below[j]) / norm;
      if (ex > worst) {
        worst = ex;
        worst_r = run.grid.r(j);
      }
    }
    rep.series.emplace_back(run.snapshots[i].t, worst);
    ++rep.snapshots_checked;
    if (worst > rep.max_excess) {
      rep.max_excess = worst;
      rep.at_t = run.snapshots[i].t;
      rep.at_r = worst_r;
    }
  }
  return rep;
}

RadialProfile snapshot_profile(const RunRecord& run, std::size_t i) {
  const auto& s = run.snapshots.at(i);
  RadialProfile p;
  p.N = run.grid.N;
  p.nonlinearity = run.nonlinearity;
  p.r.resize(s.U.size());
  for (std::size_t j = 0; j < s.U.size(); ++j) p.r[j] = run.grid.r(static_cast<int>(j));
  p.r.back() = run.grid.R;
  p.value = s.U;
  p.derivative.assign(s.U.size(), 0.0);
  p.derivative_known = false;
  p.origin_value = s.U.front();
  return p;
}

}  // namespace superheat
