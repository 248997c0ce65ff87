// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "superheat/blowup_analysis.hpp"
#include "superheat/harness.hpp"
#include "superheat/intersections.hpp"
#include "superheat/io.hpp"
#include "superheat/nonlinearity.hpp"
#include "superheat/radial_pde.hpp"
#include "superheat/rescaling.hpp"
#include "superheat/steady_states.hpp"

namespace fs = std::filesystem;
using namespace superheat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

int failures = 0;

void run(int id, const char* name, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name,
              o.detail.c_str(), sec);
  std::fflush(stdout);
}

// Blow-up scenario shared by criteria 9 to 13: B_1, k = 0, bump A = 10, N = 5.
struct Scenario {
  Nonlinearity nl;
  RunRecord run;
};

Scenario blowup_scenario(const std::string& spec, int M) {
  auto nl = Nonlinearity::parse(spec);
  Grid g{1.0, M, 5};
  SolverConfig c;
  c.snapshot_dt = 0.0;
  auto u0 = parse_initial_data("bump:A=10", nl, g);
  return {nl, simulate(nl, g, c, u0, 0.0)};
}

std::vector<Scenario>& scenarios() {
  static std::vector<Scenario> s = [] {
    std::vector<Scenario> v;
    v.push_back(blowup_scenario("exp", 4000));
    v.push_back(blowup_scenario("power:p=3", 1000));
    v.push_back(blowup_scenario("power_log:p=3,r1=1", 1000));
    return v;
  }();
  return s;
}

double trusted_F_end(const RunRecord& run) {
  return run.snapshots[run.trusted_count() - 1].F_of_M;
}

// Three base times whose F(M) levels are a factor 4 apart, the last one as
// late as the trusted window allows with room for |tau| <= 0.25.
std::vector<double> base_times(const RunRecord& run) {
  double F_end = trusted_F_end(run);
  std::vector<double> t;
  for (int i = 2; i >= 0; --i) t.push_back(time_at_F_level(run, 1.4 * F_end * std::pow(4.0, i)));
  return t;
}

Outcome crit1() {
  bool ok = true;
  std::string d;
  auto e3 = critical_exponents(3);
  ok &= e3.p_S == 5.0 && e3.q_S == 1.25;
  for (int N = 1; N <= 10; ++N) ok &= std::isinf(critical_exponents(N).p_JL);
  auto e = critical_exponents(11);
  double conj = std::fabs(e.q_JL - e.p_JL / (e.p_JL - 1.0));
  // Independent closed form for N = 11: 1 + 4 / (7 - 2 sqrt 10).
  double pjl = 1.0 + 4.0 / (7.0 - 2.0 * std::sqrt(10.0));
  ok &= conj <= 1e-12 && std::fabs(e.p_JL - pjl) <= 1e-12 * pjl;
  d = fmt("p_S(3)=%.17g q_S(3)=%.17g p_JL(11)=%.12g conj_err=%.2e", e3.p_S, e3.q_S, e.p_JL, conj);
  return {ok, d};
}

Outcome crit2() {
  double worst = 0;
  std::string where;
  for (const char* spec : {"power:p=2", "exp", "power_log:p=3,r1=1", "exp_power:r2=2"}) {
    auto nl = Nonlinearity::parse(spec);
    for (int i = 0; i < 25; ++i) {
      double u = std::pow(10.0, 6.0 * i / 24.0);
      // exp(u^2) has F below the smallest double past u ~ 27; round trip in log form there.
      double lf = eval_log_F(nl, u, 1e-12);
      double back = lf > -700.0 ? eval_F_inverse(nl, eval_F(nl, u, 1e-12), 1e-12)
                                : eval_F_inverse_log(nl, lf, 1e-12);
      double rel = std::fabs(back - u) / u;
      if (rel > worst) {
        worst = rel;
        where = fmt("%s u=%g", spec, u);
      }
    }
  }
  return {worst <= 1e-6, fmt("max rel err %.2e at %s", worst, where.c_str())};
}

Outcome crit3() {
  bool ok = true;
  std::string d;
  for (const char* fam : {"power", "power_log"})
    for (double p : {2.0, 3.0, 5.0}) {
      std::string spec = std::string(fam) + ":p=" + fmt("%g", p) + (fam[5] ? ",r1=1" : "");
      double q = estimate_q(Nonlinearity::parse(spec), 1e8).q;
      double err = std::fabs(q - p / (p - 1.0));
      ok &= err <= 1e-2;
      d += fmt("%s:%.1e ", spec.c_str(), err);
    }
  for (const char* spec : {"exp", "exp_power:r2=2", "iterexp:n=2", "iterexp:n=3"}) {
    double err = std::fabs(estimate_q(Nonlinearity::parse(spec), 1e8).q - 1.0);
    ok &= err <= 1e-2;
    d += fmt("%s:%.1e ", spec, err);
  }
  return {ok, d};
}

Outcome crit4() {
  bool ok = true;
  std::string d;
  for (auto [spec, q, N] : {std::tuple{"power:p=3", 1.5, 5}, {"exp", 1.0, 3}}) {
    auto st = picard_singular(Nonlinearity::parse(spec), q, N);
    double mx = 0;
    for (double x : st.X) mx = std::max(mx, std::fabs(x));
    ok &= mx <= 1e-10 && st.iterations <= 2;
    d += fmt("%s N=%d |X|=%.1e iter=%d; ", spec, N, mx, st.iterations);
  }
  return {ok, d};
}

Outcome crit5() {
  bool ok = true;
  std::string d;
  for (auto [spec, q] : {std::pair{"exp", 1.0}, {"power_log:p=3,r1=1", 1.5}}) {
    auto nl = Nonlinearity::parse(spec);
    auto st = picard_singular(nl, q, 5);
    // Residual recomputed here over the middle half of the window.
    auto res = singular_relative_residual(st, nl);
    std::size_t n = st.s.size();
    double mid = 0;
    for (std::size_t i = n / 4; i < 3 * n / 4; ++i) mid = std::max(mid, std::fabs(res[i]));
    auto th = singular_theta(st);
    double s_dec = st.s.front() + std::log(10.0);
    bool mono = true;
    for (std::size_t i = 1; i < n && st.s[i] <= s_dec; ++i)
      mono &= std::fabs(th[i - 1]) <= std::fabs(th[i]) + 1e-14;
    double th0 = std::fabs(th.front());
    bool conv = st.contraction_ratio < 1.0 && st.residual <= 1e-8;
    ok &= conv && mid <= 1e-3 && mono && th0 <= 0.05;
    d += fmt("%s ratio=%.3g resid=%.1e mono=%d theta0=%.3g; ", spec, st.contraction_ratio, mid,
             int(mono), th0);
  }
  return {ok, d};
}

Outcome crit6() {
  auto nl = Nonlinearity::power(3.0);
  ShootOptions so;
  so.tol = 1e-12;
  auto one = shoot_regular(nl, 5, 1.0, 20.0, so);
  ProfileInterpolant P1(one.profile);
  double worst = 0;
  for (double alpha : {1.0, 4.0}) {
    auto pa = shoot_regular(nl, 5, alpha, 5.0, so);
    ProfileInterpolant Pa(pa.profile);
    for (int i = 0; i <= 2000; ++i) {
      double r = 5.0 * i / 2000;
      worst = std::max(worst, std::fabs(Pa.value(r) - alpha * P1.value(alpha * r)));
    }
  }
  return {worst <= 1e-5, fmt("sup error %.2e", worst)};
}

Outcome crit7() {
  bool ok = true;
  std::string d;
  for (auto [spec, N, alpha] : {std::tuple{"exp", 3, 0.0}, {"power:p=3", 5, 1.0}}) {
    auto nl = Nonlinearity::parse(spec);
    ShootOptions so;
    so.tol = 1e-12;
    auto reg = shoot_regular(nl, N, alpha, 1e4, so);
    std::vector<double> g;
    for (int i = 0; i <= 18420; ++i) g.push_back(1e-4 * std::pow(1e8, i / 18420.0));
    g.back() = 1e4;
    auto sing = explicit_singular_profile(nl, N, g);
    std::vector<int> counts;
    for (double rm : {1e2, 1e3, 1e4}) counts.push_back(count_intersections(reg.profile, sing, 0.0, rm).count);
    ok &= counts[0] >= 2 && counts[1] > counts[0] && counts[2] > counts[1];
    d += fmt("%s N=%d counts %d,%d,%d; ", spec, N, counts[0], counts[1], counts[2]);
  }
  return {ok, d};
}

// sup over t <= 1 of the max-norm distance from the steady profile.
double stationary_drift(const Nonlinearity& nl, int N, double alpha, int M) {
  Grid g{1.0, M, N};
  auto u0 = parse_initial_data(fmt("steady:alpha=%.17g", alpha), nl, g);
  auto phi = u0.on_grid(g);
  SolverConfig c;
  c.snapshot_dt = 0.01;
  c.rtol = 1e-10;
  c.atol = 1e-12;
  auto run = simulate(nl, g, c, u0, phi.back());
  double worst = 0;
  for (const auto& s : run.snapshots)
    for (int j = 0; j <= M; ++j) worst = std::max(worst, std::fabs(s.U[j] - phi[j]));
  return worst;
}

Outcome crit8() {
  bool ok = true;
  std::string d;
  for (auto [spec, N, alpha] : {std::tuple{"exp", 3, 0.5}, {"power:p=3", 5, 1.0}}) {
    auto nl = Nonlinearity::parse(spec);
    double e1 = stationary_drift(nl, N, alpha, 50), e2 = stationary_drift(nl, N, alpha, 100);
    double factor = e1 / e2;
    ok &= factor >= 3.6;
    d += fmt("%s N=%d err %.3e -> %.3e factor %.3f order %.2f; ", spec, N, e1, e2, factor,
             std::log2(factor));
  }
  return {ok, d};
}

Outcome crit9() {
  bool ok = true;
  std::string d;
  for (auto& sc : scenarios()) {
    const auto& S = sc.run.snapshots;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = sc.run.settled_index(); i < S.size(); ++i)
      for (std::size_t j = i + 1; j < S.size(); ++j)
        worst = std::max(worst, (S[i].F_of_M - S[j].F_of_M) / (S[j].t - S[i].t));
    ok &= sc.run.termination == Termination::threshold && worst <= 1.05;
    d += fmt("%s max quotient %.6f; ", sc.nl.label().c_str(), worst);
  }
  return {ok, d};
}

Outcome crit10() {
  bool ok = true;
  std::string d;
  for (auto& sc : scenarios()) {
    auto rep = classify(sc.run, sc.nl);
    double lo = rep.ratio_liminf.value_or(-1), hi = rep.ratio_limsup.value_or(1e9);
    bool good = rep.verdict == Verdict::type_I && lo >= 0.1 && hi <= 5.0;
    ok &= good;
    d += fmt("%s %s [%.4f, %.4f] n=%zu; ", sc.nl.label().c_str(), to_string(rep.verdict).c_str(),
             lo, hi, rep.window_size);
  }
  auto nl = Nonlinearity::exponential();
  std::vector<double> times;
  for (int i = 0; i < 200; ++i) times.push_back(1.0 - std::pow(10.0, -6.0 * i / 199.0));
  times.front() = 0.0;
  auto syn = synthetic_ode_run(nl, Grid{1.0, 16, 5}, 1.0, times);
  auto rep = classify(syn, nl);
  double dev = 0;
  for (auto [t, v] : rep.ratio) dev = std::max(dev, std::fabs(v - 1.0));
  ok &= !rep.ratio.empty() && dev <= 1e-6;
  d += fmt("synthetic |ratio-1| %.2e", dev);
  return {ok, d};
}

Outcome crit11() {
  auto& sc = scenarios()[0];
  auto st = picard_singular(sc.nl, 1.0, 5);
  double r_lo = std::exp(st.s_min), r_hi = std::min(std::exp(st.s_max), sc.run.grid.R);
  std::vector<double> rg;
  for (int i = 0; i <= 2000; ++i) rg.push_back(r_lo * std::pow(r_hi / r_lo, i / 2000.0));
  rg.back() = r_hi;
  auto ustar = transform_to_radial(st, sc.nl, rg);
  auto tr = intersection_trace(sc.run, ustar, 0.0, r_hi);
  double ts = *sc.run.settle_time;
  int base = -1, worst = -1, bad = 0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (tr.t[i] < ts) continue;
    if (tr.counts[i] < 0) {
      ++bad;
      continue;
    }
    if (base < 0) base = tr.counts[i];
    worst = std::max(worst, tr.counts[i]);
  }
  bool ok = base >= 0 && worst <= base + 1;
  return {ok, fmt("count at settlement %d, max after %d, indistinguishable %d", base, worst, bad)};
}

Outcome crit12() {
  auto& sc = scenarios()[0];
  bool ok = true;
  std::string d;
  // |tau| <= 0.5 needs F(M) to range over [F/2, 3F/2] around the base time.
  double t_mid = time_at_F_level(sc.run, 4.0 * trusted_F_end(sc.run));
  double eps = check_lambda_ratio(sc.run, sc.nl, t_mid, {-0.5, -0.25, 0.0, 0.25, 0.5}).worst_eps;
  double v00 = 1, minv = 1e9;
  for (double ti : base_times(sc.run)) {
    auto rp = build_rescaled(sc.run, sc.nl, ti, 1.0, 0.25);
    double c = rp.v[rp.tau_index(0.0)][0];
    if (c != 1.0) v00 = c;
    minv = std::min(minv, check_vt_bounds(rp, 1.0, 0.25).min_v);
  }
  auto gb = check_gradient_bound(sc.run, sc.nl);
  double late = 0;
  std::size_t n = gb.series.size();
  for (std::size_t i = n / 2; i < n; ++i) late = std::max(late, gb.series[i].second);
  ok = eps <= 0.05 && v00 == 1.0 && minv >= 0.6 && late <= 0.02;
  d = fmt("lambda eps %.3g, v(0,0)=%.17g, min v %.4f, gradient excess %.3g", eps, v00, minv, late);
  return {ok, d};
}

Outcome crit13() {
  bool ok = true;
  std::string d;
  for (auto [idx, target] : {std::pair{1, std::sqrt(0.5)}, {0, 0.0}}) {
    auto& sc = scenarios()[idx];
    d += sc.nl.label() + " w(0,0):";
    for (double ti : base_times(sc.run)) {
      auto rp = build_rescaled(sc.run, sc.nl, ti, 1.0, 0.25);
      double w = rp.w[rp.tau_index(0.0)][0];
      ok &= std::fabs(w - target) <= 0.05;
      d += fmt(" %.6f", w);
    }
    d += "; ";
  }
  return {ok, d};
}

Outcome crit14() {
  fs::path root = fs::temp_directory_path() / fmt("superheat_accept_%d", int(::getpid()));
  ExperimentConfig c;
  c.nonlinearity = "power:p=3";
  c.N = 5;
  c.k = 0.0;
  c.initial = "bump:A=10";
  c.M = 400;
  c.rescaling = true;
  std::vector<std::string> names = {"snapshots.csv", "series.csv", "ratio.csv", "delta.csv"};
  std::vector<std::string> first;
  bool ok = true;
  for (int rep = 0; rep < 2; ++rep) {
    c.output = (root / fmt("run_%d", rep)).string();
    run_experiment(c);
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto text = io::read_file(fs::path(c.output) / names[i]);
      if (rep == 0) first.push_back(text);
      else ok &= text == first[i];
    }
  }
  std::size_t bytes = 0;
  for (auto& s : first) bytes += s.size();
  fs::remove_all(root);
  return {ok, fmt("%zu CSV files, %zu bytes compared", names.size(), bytes)};
}

}  // namespace

int main() {
  run(1, "exponent exactness", crit1);
  run(2, "transform round trip", crit2);
  run(3, "q estimation", crit3);
  run(4, "scale-invariant singular state", crit4);
  run(5, "non-invariant singular state", crit5);
  run(6, "steady scaling law", crit6);
  run(7, "growing intersection counts", crit7);
  run(8, "stationarity and spatial order", crit8);
  run(9, "comparison inequality", crit9);
  run(10, "type I classification", crit10);
  run(11, "bounded intersection trace", crit11);
  run(12, "rescaled bounds", crit12);
  run(13, "rescaled anchor", crit13);
  run(14, "determinism", crit14);
  std::printf("%d of 14 criteria failed\n", failures);
  return failures ? 1 : 0;
}
