#include <cmath>

#include "doctest.h"
#include "superheat/blowup_analysis.hpp"
#include "superheat/error.hpp"
#include "superheat/radial_pde.hpp"

using namespace superheat;

namespace {

RunRecord stationary(TimeScheme scheme, int M = 50) {
  auto nl = Nonlinearity::exponential();
  Grid g{1.0, M, 3};
  auto u0 = parse_initial_data("steady:alpha=0.5", nl, g);
  SolverConfig c;
  c.scheme = scheme;
  c.t_horizon = 0.5;
  c.snapshot_dt = 0.05;
  return simulate(nl, g, c, u0, u0.on_grid(g).back());
}

}  // namespace

TEST_CASE("steady data stays put") {
  for (auto scheme : {TimeScheme::explicit_rk, TimeScheme::implicit_trapezoid}) {
    auto run = stationary(scheme);
    CHECK(run.termination == Termination::horizon);
    const auto& U0 = run.snapshots.front().U;
    for (const auto& s : run.snapshots)
      for (std::size_t j = 0; j < U0.size(); ++j) CHECK(std::fabs(s.U[j] - U0[j]) <= 1e-4);
    CHECK_THROWS_AS(estimate_blowup_time(run), Error);
    auto rep = classify(run, Nonlinearity::exponential());
    CHECK(rep.verdict == Verdict::global_bounded);
    auto d = delta_sup_series(run);
    for (auto [t, v] : d) CHECK(std::fabs(v) <= 1e-3);
  }
}

TEST_CASE("boundary value must match the data") {
  auto nl = Nonlinearity::exponential();
  Grid g{1.0, 32, 3};
  auto u0 = parse_initial_data("flat:a=0", nl, g);
  CHECK_THROWS_AS(simulate(nl, g, SolverConfig{}, u0, 1.0), Error);
  CHECK_THROWS_AS((Grid{1.0, 4, 3}.validate()), Error);
}

TEST_CASE("flat data has no gradient excess") {
  auto nl = Nonlinearity::power(3.0);
  Grid g{1.0, 32, 3};
  auto u0 = parse_initial_data("flat:a=0.5", nl, g);
  SolverConfig c;
  c.t_horizon = 0.01;
  auto run = simulate(nl, g, c, u0, 0.5);
  auto gb = check_gradient_bound(run, nl);
  REQUIRE(!gb.series.empty());
  CHECK(gb.series.front().second <= 1e-12);
}

TEST_CASE("bump data blows up at the origin") {
  auto nl = Nonlinearity::power(3.0);
  Grid g{1.0, 200, 5};
  SolverConfig c;
  c.snapshot_dt = 0.0;
  auto run = simulate(nl, g, c, parse_initial_data("bump:A=10", nl, g), 0.0);
  CHECK(run.termination == Termination::threshold);
  for (const auto& s : run.snapshots) CHECK(s.argmax_r == 0.0);
  auto fit = estimate_blowup_time(run);
  CHECK(fit.consistent);
  CHECK(fit.T_est >= fit.lower_bound - 1e-9);
  double F_first = run.snapshots[fit.window_begin].F_of_M;
  CHECK(fit.T_est <= fit.lower_bound + 0.1 * F_first);
}

TEST_CASE("synthetic control") {
  auto nl = Nonlinearity::exponential();
  std::vector<double> times;
  for (int i = 0; i < 100; ++i) times.push_back(1.0 - std::pow(10.0, -5.0 * i / 99.0) + 0.0);
  times.front() = 0.0;
  auto run = synthetic_ode_run(nl, Grid{1.0, 16, 3}, 1.0, times);
  auto fit = estimate_blowup_time(run);
  CHECK(std::fabs(fit.T_est - 1.0) <= 1e-6);
  auto d = delta_sup_series(run);
  for (auto [t, v] : d) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  auto rep = classify(run, nl);
  CHECK(rep.verdict == Verdict::type_I);
}

TEST_CASE("enum names round trip") {
  for (auto t : {Termination::horizon, Termination::threshold, Termination::dt_underflow})
    CHECK(termination_from_string(to_string(t)) == t);
  for (auto s : {TimeScheme::explicit_rk, TimeScheme::implicit_trapezoid})
    CHECK(scheme_from_string(to_string(s)) == s);
}
