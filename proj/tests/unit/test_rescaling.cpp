#include <cmath>

#include "doctest.h"
#include "superheat/error.hpp"
#include "superheat/rescaling.hpp"

using namespace superheat;

TEST_CASE("g and G pairs") {
  CHECK(g_G_pair(1.0).G(0.0) == 1.0);
  auto p2 = g_G_pair(2.0);
  CHECK(p2.G(2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p2.g(3.0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(g_G_pair(1.5).G_inverse(1.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK_THROWS_AS(g_G_pair(0.9), Error);

  for (double q : {1.0, 1.25, 1.5, 2.0, 3.0}) {
    auto p = g_G_pair(q);
    for (double v : {0.1, 0.5, 1.0, 2.0, 7.0}) CHECK(std::fabs(p.G(p.G_inverse(v)) - v) <= 1e-12 * v);
    for (double eta : {0.5, 1.0, 2.0}) {
      double h = 1e-5;
      double d = (p.G(eta + h) - p.G(eta - h)) / (2 * h);
      CHECK(d == doctest::Approx(-1.0 / p.g(eta)).epsilon(1e-8));
    }
  }
}

namespace {

RunRecord synthetic() {
  std::vector<double> times;
  for (int i = 0; i < 400; ++i) times.push_back(1.0 - std::pow(10.0, -4.0 * i / 399.0));
  times.front() = 0.0;
  return synthetic_ode_run(Nonlinearity::exponential(), Grid{1.0, 64, 5}, 1.0, times);
}

}  // namespace

TEST_CASE("lambda ratio on the synthetic control") {
  auto run = synthetic();
  auto nl = Nonlinearity::exponential();
  double t = 1.0 - 1e-2;
  auto rep = check_lambda_ratio(run, nl, t, {-0.5, -0.25, 0.0, 0.25, 0.5});
  REQUIRE(rep.ratio.size() == 5);
  CHECK(rep.ratio[2] == 1.0);
  CHECK(rep.worst_eps <= 1e-6);
}

TEST_CASE("rescaled profile anchors") {
  auto run = synthetic();
  auto nl = Nonlinearity::exponential();
  double t = 1.0 - 1e-2;
  auto rp = build_rescaled(run, nl, t, 1.0, 0.25);
  std::size_t i0 = rp.tau_index(0.0);
  CHECK(rp.v[i0][0] == 1.0);
  CHECK(std::fabs(rp.w[i0][0]) <= 1e-12);
  auto cr = check_ratio_u_center(run, nl, 1.0, t, 1.0, 0.25);
  CHECK(cr.min_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(build_rescaled(run, nl, t, 1e3, 0.25), Error);
}
