#include <cmath>
#include <numbers>

#include "doctest.h"
#include "superheat/error.hpp"
#include "superheat/intersections.hpp"
#include "superheat/steady_states.hpp"

using namespace superheat;

namespace {

RadialProfile sampled(double a, double b, int n, double (*fn)(double), double (*dfn)(double)) {
  RadialProfile p;
  for (int i = 0; i <= n; ++i) {
    double r = a + (b - a) * i / n;
    p.r.push_back(r);
    p.value.push_back(fn(r));
    p.derivative.push_back(dfn(r));
  }
  return p;
}

double zero(double) { return 0.0; }
double neg_sin(double r) { return -std::sin(r); }

}  // namespace

TEST_CASE("cos against zero on (0, 3 pi)") {
  const double pi = std::numbers::pi;
  auto A = sampled(0, 3 * pi, 600, [](double r) { return std::cos(r); }, neg_sin);
  auto B = sampled(0, 3 * pi, 10, zero, zero);
  auto rep = count_intersections(A, B, 0.0, 3 * pi);
  REQUIRE(rep.count == 3);
  CHECK(rep.zero_locations[0] == doctest::Approx(pi / 2).epsilon(1e-9));
  CHECK(rep.zero_locations[1] == doctest::Approx(3 * pi / 2).epsilon(1e-9));
  CHECK(rep.zero_locations[2] == doctest::Approx(5 * pi / 2).epsilon(1e-9));
  CHECK(*rep.min_gap == doctest::Approx(pi).epsilon(1e-8));

  auto sym = count_intersections(B, A, 0.0, 3 * pi);
  CHECK(sym.count == rep.count);
}

TEST_CASE("monotone on nested intervals") {
  const double pi = std::numbers::pi;
  auto A = sampled(0, 3 * pi, 600, [](double r) { return std::cos(r); }, neg_sin);
  auto B = sampled(0, 3 * pi, 10, zero, zero);
  int last = -1;
  for (double b : {1.0, 2.0, 5.0, 8.0, 9.0}) {
    int c = count_intersections(A, B, 0.0, b).count;
    CHECK(c >= last);
    last = c;
  }
}

TEST_CASE("errors") {
  auto A = sampled(0, 1, 10, [](double r) { return r; }, [](double) { return 1.0; });
  auto B = sampled(0, 2, 10, [](double r) { return r; }, [](double) { return 1.0; });
  try {
    count_intersections(A, B, 0.0, 1.0);
    FAIL("identical profiles accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_profile);
  }
  try {
    count_intersections(A, B, 0.0, 1.5);
    FAIL("overlap not checked");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_overlap);
  }
}

TEST_CASE("regular versus singular steady states") {
  auto nl = Nonlinearity::power(3.0);
  auto reg = shoot_regular(nl, 5, 1.0, 1000.0);
  std::vector<double> g;
  for (int i = 0; i <= 8000; ++i) g.push_back(1e-3 * std::pow(1e6, i / 8000.0));
  g.back() = 1000.0;
  auto sing = explicit_singular_profile(nl, 5, g);
  int c2 = count_intersections(reg.profile, sing, 0.0, 100.0).count;
  int c3 = count_intersections(reg.profile, sing, 0.0, 1000.0).count;
  CHECK(c2 >= 2);
  CHECK(c3 >= c2);
}
