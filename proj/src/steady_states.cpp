#include "superheat/steady_states.hpp"

#include <algorithm>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <cmath>
#include <limits>

#include "superheat/error.hpp"
#include "superheat/kernels.hpp"
#include "superheat/ode.hpp"

namespace superheat {

// ---------------------------------------------------------------------------
// Explicit singular solutions

double explicit_singular_power(double p, int N, double r) {
  if (N < 3 || !(p > double(N) / (N - 2)))
    fail(ErrorCode::domain, "explicit power singular solution needs N >= 3 and p > N/(N-2)");
  if (!(r > 0)) fail(ErrorCode::domain, "singular solution needs r > 0");
  double c = 2.0 * N - 4.0 * p / (p - 1);
  return std::pow((p - 1) * r * r / c, -1.0 / (p - 1));
}

double explicit_singular_power_derivative(double p, int N, double r) {
  return -2.0 / ((p - 1) * r) * explicit_singular_power(p, N, r);
}

double explicit_singular_exp(int N, double r) {
  if (N < 3) fail(ErrorCode::domain, "explicit exponential singular solution needs N >= 3");
  if (!(r > 0)) fail(ErrorCode::domain, "singular solution needs r > 0");
  return -std::log(r * r / (2.0 * N - 4.0));
}

double explicit_singular_exp_derivative(int N, double r) {
  if (N < 3) fail(ErrorCode::domain, "explicit exponential singular solution needs N >= 3");
  return -2.0 / r;
}

double explicit_singular(const Nonlinearity& nl, int N, double r) {
  switch (nl.family()) {
    case Family::power: return explicit_singular_power(nl.params().at("p"), N, r);
    case Family::exp: return explicit_singular_exp(N, r);
    default: fail(ErrorCode::domain, "explicit singular solutions exist only for power and exp");
  }
}

RadialProfile explicit_singular_profile(const Nonlinearity& nl, int N,
                                        const std::vector<double>& r_grid) {
  RadialProfile p;
  p.N = N;
  p.nonlinearity = nl.label();
  p.q = nl.q_analytic();
  for (double r : r_grid) {
    p.r.push_back(r);
    p.value.push_back(explicit_singular(nl, N, r));
    p.derivative.push_back(nl.family() == Family::power
                               ? explicit_singular_power_derivative(nl.params().at("p"), N, r)
                               : explicit_singular_exp_derivative(N, r));
  }
  p.residual = 0.0;
  return p;
}

// ---------------------------------------------------------------------------
// Kernel Z

double KernelZ::Z(double s) const {
  switch (branch) {
    case Branch::distinct_real: {
      double l1 = lambda1.real(), l2 = lambda2.real();
      return (std::exp(l1 * s) - std::exp(l2 * s)) / (l1 - l2);
    }
    case Branch::double_root: return s * std::exp(lambda1.real() * s);
    case Branch::complex_pair: {
      double mu = lambda1.real(), w = std::fabs(lambda1.imag());
      return std::exp(mu * s) * std::sin(w * s) / w;
    }
  }
  return 0.0;
}

double KernelZ::Zp(double s) const {
  switch (branch) {
    case Branch::distinct_real: {
      double l1 = lambda1.real(), l2 = lambda2.real();
      return (l1 * std::exp(l1 * s) - l2 * std::exp(l2 * s)) / (l1 - l2);
    }
    case Branch::double_root: {
      double l = lambda1.real();
      return (1.0 + l * s) * std::exp(l * s);
    }
    case Branch::complex_pair: {
      double mu = lambda1.real(), w = std::fabs(lambda1.imag());
      return std::exp(mu * s) * (mu * std::sin(w * s) / w + std::cos(w * s));
    }
  }
  return 0.0;
}

double KernelZ::Zpp(double s) const { return -b * Zp(s) - c * Z(s); }

KernelZ kernel_Z(double q, int N) {
  KernelZ k;
  k.q = q;
  k.N = N;
  k.b = N + 2 - 4 * q;
  k.c = 2.0 * N - 4 * q;
  double disc = k.b * k.b - 4 * k.c;
  if (std::fabs(disc) <= 1e-14 * std::max(1.0, k.b * k.b)) {
    k.branch = KernelZ::Branch::double_root;
    k.lambda1 = k.lambda2 = -k.b / 2;
  } else if (disc > 0) {
    k.branch = KernelZ::Branch::distinct_real;
    double sq = std::sqrt(disc);
    // larger root first
    k.lambda1 = (-k.b + sq) / 2;
    k.lambda2 = (-k.b - sq) / 2;
  } else {
    k.branch = KernelZ::Branch::complex_pair;
    double w = std::sqrt(-disc) / 2;
    k.lambda1 = {-k.b / 2, w};
    k.lambda2 = {-k.b / 2, -w};
  }
  double sigma = -std::max(k.lambda1.real(), k.lambda2.real());
  if (!(sigma > 0))
    fail(ErrorCode::stability,
         "characteristic root with nonnegative real part (needs q < (N+2)/4)");
  k.alpha = 0.9 * sigma;
  double S = 400.0 / sigma;
  const int n = 40000;
  double beta = 0.0;
  for (int i = 0; i <= n; ++i) {
    double s = S * i / n;
    double v = (std::fabs(k.Z(s)) + std::fabs(k.Zp(s)) + std::fabs(k.Zpp(s))) * std::exp(k.alpha * s);
    beta = std::max(beta, v);
  }
  k.beta = 1.01 * beta;
  return k;
}

// ---------------------------------------------------------------------------
// Picard construction

namespace {

struct PicardContext {
  const Nonlinearity& nl;
  Nonlinearity f0;
  double q;
  int N;
  double c;      // 2N - 4q
  double log_c;
  double inverse_tol;
};

struct NodeTerms {
  double zeta;
  double ratio;   // f/f0 - 1 at zeta
  double excess;  // f0' F0 - q at zeta
};

NodeTerms node_terms(const PicardContext& ctx, double s, double X, double guess) {
  double lv = 2 * s - X - ctx.log_c;
  NodeTerms t{};
  try {
    t.zeta = eval_F_inverse_log(ctx.f0, lv, ctx.inverse_tol,
                                guess > 0 ? std::optional<double>(guess) : std::nullopt);
    t.excess = eval_fprime_F(ctx.f0, t.zeta, 1e-13) - ctx.q;
  } catch (const Error& e) {
    fail(ErrorCode::overflow, std::string("cannot evaluate zeta: ") + e.what());
  }
  t.ratio = ctx.nl.has_companion()
                ? std::expm1(ctx.nl.log_f(t.zeta) - ctx.f0.log_f(t.zeta))
                : 0.0;
  return t;
}

double h_total(const PicardContext& ctx, double X, double Y, const NodeTerms& t) {
  double h1 = ctx.c * (std::expm1(X) - X) + (ctx.q - 1) * Y * Y;
  double h2 = ctx.c * t.ratio * std::exp(X) + t.excess * (Y - 2) * (Y - 2);
  return h1 + h2;
}

struct Convolver {
  double ds;
  std::size_t L;
  std::vector<double> zrev, zprev;  // kernel samples reversed

  Convolver(const KernelZ& k, double ds_, std::size_t n) : ds(ds_) {
    double span = std::log(std::max(k.beta, 1.0) * 1e18) / k.alpha;
    L = std::min<std::size_t>(n, std::size_t(std::ceil(span / ds)) + 1);
    zrev.resize(L);
    zprev.resize(L);
    for (std::size_t m = 0; m < L; ++m) {
      zrev[L - 1 - m] = k.Z(m * ds);
      zprev[L - 1 - m] = k.Zp(m * ds);
    }
  }

  // X_i = -int h Z(s_i - eta), Y_i = -int h Z'(s_i - eta), trapezoid rule
  void apply(const std::vector<double>& h, std::vector<double>& X, std::vector<double>& Y) const {
    const auto& kt = kernels::active();
    std::size_t n = h.size();
    std::vector<double> hw = h;
    hw[0] *= 0.5;
    X.resize(n);
    Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j0 = i + 1 > L ? i + 1 - L : 0;
      std::size_t cnt = i - j0 + 1;
      double sx = kt.dot(hw.data() + j0, zrev.data() + (L - cnt), cnt);
      double sy = kt.dot(hw.data() + j0, zprev.data() + (L - cnt), cnt);
      sy -= (i == 0) ? hw[0] : 0.5 * h[i];
      X[i] = -ds * sx;
      Y[i] = -ds * sy;
    }
  }
};

struct FullGrid {
  std::vector<double> s, X, Y, zeta;
};

void evaluate_h(const PicardContext& ctx, FullGrid& g, std::vector<double>& h,
                std::vector<double>* ratio_out = nullptr) {
  std::size_t n = g.s.size();
  h.resize(n);
  if (ratio_out) ratio_out->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double guess = g.zeta[i] > 0 ? g.zeta[i] : (i ? g.zeta[i - 1] : 0.0);
    NodeTerms t = node_terms(ctx, g.s[i], g.X[i], guess);
    g.zeta[i] = t.zeta;
    h[i] = h_total(ctx, g.X[i], g.Y[i], t);
    if (ratio_out) (*ratio_out)[i] = t.ratio;
    if (!std::isfinite(h[i])) fail(ErrorCode::overflow, "non-finite integrand in the Picard map");
  }
}

PicardContext make_context(const Nonlinearity& nl, double q, int N, double inverse_tol) {
  PicardContext ctx{nl, nl.companion(), q, N, 2.0 * N - 4 * q, 0.0, inverse_tol};
  if (!(ctx.c > 0)) fail(ErrorCode::domain, "the construction needs 2N - 4q > 0");
  ctx.log_c = std::log(ctx.c);
  return ctx;
}

void fill_derived(SingularTransform& st, const Nonlinearity& nl);

}  // namespace

SingularTransform picard_singular(const Nonlinearity& nl, double q, int N,
                                  const PicardOptions& opt) {
  if (N < 3) fail(ErrorCode::domain, "the singular construction needs N >= 3");
  if (!(opt.ds > 0) || !(opt.s_max > opt.s_min))
    fail(ErrorCode::config_error, "bad s-window");
  CriticalExponents ce = critical_exponents(N);
  if (!(q < ce.q_S) || std::fabs(q - ce.q_S) <= kQTolerance)
    fail(ErrorCode::stability, "q must stay below q_S = (N+2)/4");
  PicardContext ctx = make_context(nl, q, N, opt.inverse_tol);
  KernelZ kz = kernel_Z(q, N);

  // Padding below s_min replaces the integral over (-inf, s_min).
  double H0;
  {
    NodeTerms t = node_terms(ctx, opt.s_min, 0.0, 0.0);
    H0 = std::fabs(h_total(ctx, 0.0, 0.0, t));
  }
  double pad = 2.0;
  if (H0 > 0)
    pad = std::clamp(std::log(kz.beta * H0 / (kz.alpha * 0.01 * opt.tol)) / kz.alpha, 2.0, 400.0);
  std::size_t n_pad = std::size_t(std::ceil(pad / opt.ds));

  double s_max = opt.s_max;
  for (int attempt = 0; attempt <= opt.max_window_halvings; ++attempt) {
    std::size_t n_win = std::size_t(std::llround((s_max - opt.s_min) / opt.ds)) + 1;
    if (n_win < 8) break;
    double ds = (s_max - opt.s_min) / double(n_win - 1);
    std::size_t n = n_pad + n_win;
    FullGrid g;
    g.s.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.s[i] = opt.s_min + (double(i) - double(n_pad)) * ds;
    g.X.assign(n, 0.0);
    g.Y.assign(n, 0.0);
    g.zeta.assign(n, 0.0);
    Convolver conv(kz, ds, n);

    SingularTransform st;
    std::vector<double> h, Xn, Yn;
    double prev = NAN;
    int growing = 0;
    bool converged = false, failed = false;
    for (int k = 1; k <= opt.max_iter; ++k) {
      evaluate_h(ctx, g, h);
      conv.apply(h, Xn, Yn);
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        d = std::max(d, std::fabs(Xn[i] - g.X[i]) + std::fabs(Yn[i] - g.Y[i]));
      g.X.swap(Xn);
      g.Y.swap(Yn);
      st.update_history.push_back(d);
      st.iterations = k;
      st.residual = d;
      if (!std::isfinite(d)) {
        failed = true;
        break;
      }
      if (std::isfinite(prev) && prev > 0) st.contraction_ratio = d / prev;
      if (d < opt.tol) {
        converged = true;
        break;
      }
      if (std::isfinite(prev) && d >= prev) {
        if (++growing >= 3 && k >= 5) {
          failed = true;
          break;
        }
      } else {
        growing = 0;
      }
      prev = d;
    }
    if (!converged || failed) {
      s_max -= std::log(2.0);
      continue;
    }
    st.q = q;
    st.N = N;
    st.ds = ds;
    st.s_min = opt.s_min;
    st.s_max = s_max;
    st.window_halvings = attempt;
    st.nonlinearity = nl.label();
    st.pad_s.assign(g.s.begin(), g.s.begin() + n_pad);
    st.pad_X.assign(g.X.begin(), g.X.begin() + n_pad);
    st.pad_X_prime.assign(g.Y.begin(), g.Y.begin() + n_pad);
    st.s.assign(g.s.begin() + n_pad, g.s.end());
    st.X.assign(g.X.begin() + n_pad, g.X.end());
    st.X_prime.assign(g.Y.begin() + n_pad, g.Y.end());
    evaluate_h(ctx, g, h);
    st.truncation_bound = std::fabs(h[0]) * kz.beta * std::exp(-kz.alpha * n_pad * ds) / kz.alpha;
    st.boundary_size = std::fabs(st.X.front()) + std::fabs(st.X_prime.front());
    fill_derived(st, nl);
    if (st.boundary_size > opt.tol_boundary)
      fail(ErrorCode::non_convergence,
           "X does not vanish at s_min (|X| + |X'| = " + std::to_string(st.boundary_size) +
               "); lower s_min");
    return st;
  }
  fail(ErrorCode::non_convergence,
       "Picard iteration did not contract even after lowering s_max; the smallness "
       "condition may need a smaller window");
}

SingularTransform picard_map(const SingularTransform& st, const Nonlinearity& nl) {
  PicardContext ctx = make_context(nl, st.q, st.N, 1e-13);
  KernelZ kz = kernel_Z(st.q, st.N);
  FullGrid g;
  g.s = st.pad_s;
  g.s.insert(g.s.end(), st.s.begin(), st.s.end());
  g.X = st.pad_X;
  g.X.insert(g.X.end(), st.X.begin(), st.X.end());
  g.Y = st.pad_X_prime;
  g.Y.insert(g.Y.end(), st.X_prime.begin(), st.X_prime.end());
  g.zeta.assign(g.s.size(), 0.0);
  Convolver conv(kz, st.ds, g.s.size());
  std::vector<double> h, Xn, Yn;
  evaluate_h(ctx, g, h);
  conv.apply(h, Xn, Yn);
  SingularTransform out = st;
  std::size_t np = st.pad_s.size();
  out.pad_X.assign(Xn.begin(), Xn.begin() + np);
  out.pad_X_prime.assign(Yn.begin(), Yn.begin() + np);
  out.X.assign(Xn.begin() + np, Xn.end());
  out.X_prime.assign(Yn.begin() + np, Yn.end());
  double d = 0.0;
  for (std::size_t i = 0; i < Xn.size(); ++i)
    d = std::max(d, std::fabs(Xn[i] - g.X[i]) + std::fabs(Yn[i] - g.Y[i]));
  out.residual = d;
  out.iterations = st.iterations + 1;
  out.boundary_size = std::fabs(out.X.front()) + std::fabs(out.X_prime.front());
  return out;
}

std::vector<double> singular_relative_residual(const SingularTransform& st,
                                               const Nonlinearity& nl) {
  PicardContext ctx = make_context(nl, st.q, st.N, 1e-13);
  std::size_t n = st.s.size();
  std::vector<double> out(n, 0.0);
  if (n < 3) return out;
  double ds = st.ds;
  double b = st.N + 2 - 4 * st.q;
  double guess = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double Ypp;
    if (i == 0 && st.pad_X_prime.empty()) {
      Ypp = (-3 * st.X_prime[0] + 4 * st.X_prime[1] - st.X_prime[2]) / (2 * ds);
    } else if (i == n - 1) {
      Ypp = (3 * st.X_prime[i] - 4 * st.X_prime[i - 1] + st.X_prime[i - 2]) / (2 * ds);
    } else {
      double left = i == 0 ? st.pad_X_prime.back() : st.X_prime[i - 1];
      Ypp = (st.X_prime[i + 1] - left) / (2 * ds);
    }
    NodeTerms t = node_terms(ctx, st.s[i], st.X[i], guess);
    guess = t.zeta;
    double R = Ypp + b * st.X_prime[i] + ctx.c * st.X[i] + h_total(ctx, st.X[i], st.X_prime[i], t);
    out[i] = std::fabs(R) * std::exp(-st.X[i]) / (ctx.c * (1 + t.ratio));
  }
  return out;
}

std::vector<double> singular_theta(const SingularTransform& st) {
  std::vector<double> th(st.X.size());
  for (std::size_t i = 0; i < th.size(); ++i) th[i] = std::expm1(-st.X[i]);
  return th;
}

namespace {

void fill_derived(SingularTransform& st, const Nonlinearity& nl) {
  auto res = singular_relative_residual(st, nl);
  std::size_t n = res.size();
  double worst = 0.0;
  for (std::size_t i = n / 4; i < n - n / 4; ++i) worst = std::max(worst, res[i]);
  st.ode_residual = worst;
}

}  // namespace

RadialProfile transform_to_radial(const SingularTransform& st, const Nonlinearity& nl,
                                  const std::vector<double>& r_grid) {
  PicardContext ctx = make_context(nl, st.q, st.N, 1e-13);
  if (st.s.size() < 2) fail(ErrorCode::degenerate_profile, "empty transform");
  auto sx = st.s;
  auto xv = st.X;
  auto xp = st.X_prime;
  boost::math::interpolators::cubic_hermite<std::vector<double>> interp(
      std::move(sx), std::move(xv), std::move(xp));
  double lo = st.s.front(), hi = st.s.back();
  double slack = 1e-12 * std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)));
  RadialProfile p;
  p.N = st.N;
  p.q = st.q;
  p.nonlinearity = nl.label();
  p.residual = st.ode_residual;
  double guess = 0.0;
  for (double r : r_grid) {
    if (!(r > 0)) fail(ErrorCode::interpolation_range, "radius must be positive");
    double s = std::log(r);
    if (s < lo - slack || s > hi + slack)
      fail(ErrorCode::interpolation_range, "radius outside the transform window");
    s = std::clamp(s, lo, hi);
    double X = interp(s), Xp = interp.prime(s);
    double lv = 2 * std::log(r) - X - ctx.log_c;
    double U = eval_F_inverse_log(ctx.f0, lv, 1e-14,
                                  guess > 0 ? std::optional<double>(guess) : std::nullopt);
    guess = U;
    double S0 = eval_fF(ctx.f0, U, 1e-13);
    p.r.push_back(r);
    p.value.push_back(U);
    p.derivative.push_back((Xp - 2) * S0 / r);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Shooting

ShootResult shoot_regular(const Nonlinearity& nl, int N, double alpha, double r_max,
                          const ShootOptions& opt) {
  if (N < 1) fail(ErrorCode::domain, "dimension must be at least 1");
  if (!(r_max > 0)) fail(ErrorCode::domain, "r_max must be positive");
  bool positive_family = nl.family() != Family::exp && nl.family() != Family::exp_power &&
                         nl.family() != Family::iterated_exp;
  if (positive_family && !(alpha > 0))
    fail(ErrorCode::domain, "center value must be positive for this nonlinearity");
  double fa = nl.f(alpha), fpa = nl.f_prime(alpha);
  if (!std::isfinite(fa) || !std::isfinite(fpa))
    fail(ErrorCode::overflow, "f not representable at the center value");

  // local length scale from the quadratic and linearized terms
  double ell = std::numeric_limits<double>::infinity();
  if (fa > 0) ell = std::min(ell, std::sqrt(std::max(std::fabs(alpha), 1.0) / fa));
  if (std::fabs(fpa) > 0) ell = std::min(ell, 1.0 / std::sqrt(std::fabs(fpa)));
  double r0 = opt.start_fraction * std::min(r_max, ell);

  double a2 = -fa / (2.0 * N);
  double a4 = fpa * fa / (8.0 * N * (N + 2));
  double phi0 = alpha + a2 * r0 * r0 + a4 * r0 * r0 * r0 * r0;
  double dphi0 = 2 * a2 * r0 + 4 * a4 * r0 * r0 * r0;

  ShootResult res;
  RadialProfile& p = res.profile;
  p.N = N;
  p.nonlinearity = nl.label();
  p.q = nl.q_analytic();
  p.origin_value = alpha;
  p.r = {0.0, r0};
  p.value = {alpha, phi0};
  p.derivative = {0.0, dphi0};

  OdeOptions oo;
  oo.rtol = opt.tol;
  oo.atol = 1e-3 * opt.tol * std::max(1.0, std::fabs(alpha));
  oo.h_min = 1e-14 * r_max;
  Dopri5 ode(2, [&](double r, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -(N - 1) * y[1] / r - nl.f(y[0]);
  }, oo);
  ode.reset(r0, {phi0, dphi0});

  long steps = 0;
  auto observer = [&](double r, const std::vector<double>& y, const std::vector<double>&) {
    ++steps;
    if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
      res.exit = RangeExit{r, +1, "overflow"};
      return false;
    }
    if (positive_family && y[0] <= 0) {
      // linear estimate of the crossing radius
      double rp = p.r.back(), vp = p.value.back();
      double rc = rp + (r - rp) * vp / (vp - y[0]);
      res.exit = RangeExit{rc, -1, "value reached zero"};
      return false;
    }
    p.r.push_back(r);
    p.value.push_back(y[0]);
    p.derivative.push_back(y[1]);
    return steps < opt.max_steps;
  };
  auto status = ode.integrate(r_max, r0, observer);
  if (status == Dopri5::Status::step_underflow)
    fail(ErrorCode::step_underflow, "shooting step size underflow at r = " + std::to_string(ode.t()));
  res.steps = steps;
  return res;
}

}  // namespace superheat
