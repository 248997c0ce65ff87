#include <cmath>

#include "doctest.h"
#include "superheat/steady_states.hpp"

using namespace superheat;

TEST_CASE("explicit singular solutions") {
  CHECK(std::fabs(explicit_singular_exp(3, std::sqrt(2.0))) <= 1e-15);
  CHECK(explicit_singular_power(3.0, 5, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  auto nl = Nonlinearity::power(3.0);
  for (double r : {0.1, 0.7, 3.0}) {
    double h = 1e-4 * r;
    auto P = [&](double x) { return explicit_singular_power(3.0, 5, x); };
    double d2 = (P(r + h) - 2 * P(r) + P(r - h)) / (h * h);
    double d1 = explicit_singular_power_derivative(3.0, 5, r);
    CHECK(std::fabs(d2 + 4 * d1 / r + std::pow(P(r), 3)) <= 1e-5 * std::pow(P(r), 3));
    CHECK(P(r) == doctest::Approx(eval_F_inverse(nl, r * r / (10.0 - 6.0))).epsilon(1e-10));
  }
}

TEST_CASE("kernel Z for q = 1, N = 5") {
  auto k = kernel_Z(1.0, 5);
  CHECK(k.branch == KernelZ::Branch::complex_pair);
  double w = std::sqrt(15.0) / 2;
  CHECK(k.Z(0.0) == 0.0);
  CHECK(k.Zp(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (double s = 0; s <= 10; s += 0.25) {
    CHECK(std::fabs(k.Z(s) - std::exp(-1.5 * s) * std::sin(w * s) / w) <= 1e-12);
    CHECK(std::fabs(k.Zpp(s) + 3 * k.Zp(s) + 6 * k.Z(s)) <= 1e-10);
  }
}

TEST_CASE("kernel Z for q = 1.5, N = 11") {
  auto k = kernel_Z(1.5, 11);
  // lambda^2 + 7 lambda + 16 has a negative discriminant.
  CHECK(k.branch == KernelZ::Branch::complex_pair);
  CHECK(k.Z(0.1) > 0.0);
  CHECK(std::fabs(k.Z(40.0)) < 1e-20);
  for (double s = 0; s <= 10; s += 0.5) CHECK(std::fabs(k.Zpp(s) + 7 * k.Zp(s) + 16 * k.Z(s)) <= 1e-10);
}

TEST_CASE("scale-invariant Picard fixed point") {
  auto st = picard_singular(Nonlinearity::power(3.0), 1.5, 5);
  CHECK(st.iterations <= 2);
  CHECK(st.residual <= 1e-12);
  std::vector<double> r = {0.01, 0.1, 0.5};
  auto prof = transform_to_radial(st, Nonlinearity::power(3.0), r);
  for (std::size_t i = 0; i < r.size(); ++i)
    CHECK(std::fabs(prof.value[i] - explicit_singular_power(3.0, 5, r[i])) <=
          1e-10 * prof.value[i]);
  auto se = picard_singular(Nonlinearity::exponential(), 1.0, 3);
  auto pe = transform_to_radial(se, Nonlinearity::exponential(), r);
  for (std::size_t i = 0; i < r.size(); ++i)
    CHECK(std::fabs(pe.value[i] - explicit_singular_exp(3, r[i])) <= 1e-10);
}

TEST_CASE("regular shooting") {
  auto nl = Nonlinearity::exponential();
  auto res = shoot_regular(nl, 3, 0.0, 20.0);
  CHECK_FALSE(res.exit.has_value());
  CHECK(res.profile.derivative.front() == 0.0);
  CHECK(res.profile.value[1] < 0.0);
  // Below Phi*_inf near 0, above it somewhere later.
  bool above = false;
  for (std::size_t i = 1; i < res.profile.size(); ++i)
    above |= res.profile.value[i] > explicit_singular_exp(3, res.profile.r[i]);
  CHECK(res.profile.value[1] < explicit_singular_exp(3, res.profile.r[1]));
  CHECK(above);
}

TEST_CASE("shooting leaves the admissible range") {
  // u^3 in N = 3 is subcritical: the profile reaches zero at finite r.
  auto res = shoot_regular(Nonlinearity::power(3.0), 3, 1.0, 50.0);
  REQUIRE(res.exit.has_value());
  CHECK(res.exit->r < 50.0);
}
