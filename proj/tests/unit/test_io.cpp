#include <cmath>
#include <limits>

#include "doctest.h"
#include "superheat/io.hpp"
#include "superheat/profile.hpp"

using namespace superheat;

TEST_CASE("shortest round-trip doubles") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0, 1e308})
    CHECK(io::parse_double(io::format_double(v)) == v);
  CHECK(std::isinf(io::parse_double(io::format_double(std::numeric_limits<double>::infinity()))));
}

TEST_CASE("csv round trip") {
  io::CsvTable t;
  t.comments = {"made here"};
  t.header = {"a", "b"};
  t.rows = {{1.0, 2.5}, {1.0 / 3.0, -7e-12}};
  auto back = io::parse_csv(io::render_csv(t));
  CHECK(back.comments == t.comments);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
}

TEST_CASE("profile csv and interpolation") {
  RadialProfile p;
  for (int i = 0; i <= 20; ++i) {
    double r = 0.1 * i;
    p.r.push_back(r);
    p.value.push_back(r * r * r);
    p.derivative.push_back(3 * r * r);
  }
  p.N = 3;
  auto back = parse_profile_csv(render_profile_csv(p));
  CHECK(back.r == p.r);
  CHECK(back.value == p.value);
  ProfileInterpolant I(back);
  // Cubic Hermite with exact slopes reproduces a cubic.
  CHECK(I.value(0.55) == doctest::Approx(0.55 * 0.55 * 0.55).epsilon(1e-12));
  CHECK_FALSE(I.covers(2.5));
}
