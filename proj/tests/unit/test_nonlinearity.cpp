#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "superheat/error.hpp"
#include "superheat/nonlinearity.hpp"

using namespace superheat;

TEST_CASE("closed-form transforms") {
  CHECK(eval_F(Nonlinearity::power(2.0), 10.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(eval_F(Nonlinearity::exponential(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval_F_inverse(Nonlinearity::exponential(), std::exp(-1.0)) ==
        doctest::Approx(1.0).epsilon(1e-11));
  CHECK(eval_F_inverse(Nonlinearity::power(2.0), 0.25) == doctest::Approx(4.0).epsilon(1e-11));
}

TEST_CASE("F of u^3 log(e+u) against tanh-sinh") {
  auto nl = Nonlinearity::parse("power_log:p=3,r1=1");
  const double u = 50.0;
  // eta = u / s maps the tail onto (0, 1].
  auto g = [u](double s) { return s / (u * u * std::log(std::exp(1.0) + u / s)); };
  boost::math::quadrature::tanh_sinh<double> ts;
  double oracle = ts.integrate(g, 0.0, 1.0, 1e-15);
  double F = eval_F(nl, u);
  CHECK(std::fabs(F - oracle) <= 1e-8 * oracle);
  CHECK(eval_F_inverse(nl, F) == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("F domain") {
  CHECK_THROWS_AS(eval_F(Nonlinearity::exponential(), -1.0), Error);
  CHECK_THROWS_AS(eval_F(Nonlinearity::power(3.0), 0.0), Error);
}

TEST_CASE("derivative matches centered differences") {
  for (const char* spec : {"power:p=3", "power_log:p=2,r1=1", "exp", "exp_power:r2=2",
                           "exp_power_perturbed:r2=2,r3=1", "iterexp:n=2",
                           "power_log_perturbed:p=3,r1=1"}) {
    auto nl = Nonlinearity::parse(spec);
    for (double u : {0.5, 1.0, 2.0, 3.0}) {
      double h = 1e-5 * u;
      double fd = (nl.f(u + h) - nl.f(u - h)) / (2 * h);
      INFO(spec << " u=" << u);
      CHECK(std::fabs(fd - nl.f_prime(u)) <= 1e-6 * std::fabs(nl.f_prime(u)));
      CHECK(nl.f(u) > 0.0);
    }
  }
}

TEST_CASE("companions approach f") {
  for (const char* spec : {"power_log_perturbed:p=3,r1=1", "exp_power_perturbed:r2=2,r3=1"}) {
    auto nl = Nonlinearity::parse(spec);
    REQUIRE(nl.has_companion());
    double u = 1e8;
    double lr = nl.log_f(u) - nl.f0_model().log_f(u);
    CHECK(std::fabs(std::expm1(lr)) <= 0.01);
  }
}

TEST_CASE("q values") {
  CHECK(estimate_q(Nonlinearity::power(3.0)).q == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(estimate_q(Nonlinearity::exponential()).q == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::fabs(estimate_q(Nonlinearity::parse("power_log:p=2,r1=1")).q - 2.0) <= 1e-2);
}

TEST_CASE("critical exponents") {
  auto e3 = critical_exponents(3);
  CHECK(e3.p_S == 5.0);
  CHECK(e3.q_S == 1.25);
  CHECK(std::isinf(critical_exponents(10).p_JL));
  auto e1 = critical_exponents(1);
  CHECK(std::isinf(e1.p_S));
  CHECK(e1.q_S == 1.0);
  auto e = critical_exponents(11);
  CHECK(e.p_JL == doctest::Approx(6.92202).epsilon(1e-6));
  CHECK(e.q_JL == doctest::Approx(1.168861).epsilon(1e-6));
  CHECK(std::fabs(e.q_JL - e.p_JL / (e.p_JL - 1)) <= 1e-12);
  for (int N = 3; N <= 20; ++N) {
    auto c = critical_exponents(N);
    CHECK(c.p_JL > c.p_S);
    CHECK(c.q_JL < c.q_S);
    CHECK(c.q_S == doctest::Approx(c.p_S / (c.p_S - 1)).epsilon(1e-14));
  }
}

TEST_CASE("A3") {
  CHECK(check_A3(1.0, 5) == A3Verdict::satisfied);
  CHECK(check_A3(1.5, 11) == A3Verdict::satisfied);
  CHECK(check_A3(1.25, 3) == A3Verdict::boundary);
  CHECK(check_A3(1.0, 11) == A3Verdict::violated);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Nonlinearity::parse("power:p=0.5"), Error);
  CHECK_THROWS_AS(Nonlinearity::parse("nope"), Error);
}
