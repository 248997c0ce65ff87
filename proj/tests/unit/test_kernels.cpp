#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "superheat/kernels.hpp"
#include "superheat/ode.hpp"

using namespace superheat;

namespace {

std::vector<double> noise(std::mt19937_64& g, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("backends agree with the scalar reference") {
  const auto& ref = kernels::detail::scalar_table;
  std::mt19937_64 g(7);
  for (auto b : kernels::available_backends()) {
    const auto* t = kernels::table_for(b);
    REQUIRE(t != nullptr);
    INFO("backend " << kernels::name(b));
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
      auto lo = noise(g, n + 2, -1, 1), di = noise(g, n + 2, -2, 0), up = noise(g, n + 2, -1, 1);
      auto u = noise(g, n + 2, 0, 10), src = noise(g, n + 2, 0, 5);
      std::vector<double> o1(n + 2, 0.0), o2(n + 2, 0.0);
      ref.stencil(lo.data(), di.data(), up.data(), u.data(), src.data(), o1.data(), 1, n + 1);
      t->stencil(lo.data(), di.data(), up.data(), u.data(), src.data(), o2.data(), 1, n + 1);
      CHECK(same_bits(o1, o2));

      std::vector<std::vector<double>> ks;
      for (int k = 0; k < 7; ++k) ks.push_back(noise(g, n, -3, 3));
      const double* kp[7];
      for (int k = 0; k < 7; ++k) kp[k] = ks[k].data();
      double c[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
      auto base = noise(g, n, 0, 1);
      std::vector<double> c1(n), c2(n);
      ref.combine(base.data(), 1e-3, c, kp, 7, c1.data(), n);
      t->combine(base.data(), 1e-3, c, kp, 7, c2.data(), n);
      CHECK(same_bits(c1, c2));
      ref.combine(nullptr, 0.5, c, kp, 7, c1.data(), n);
      t->combine(nullptr, 0.5, c, kp, 7, c2.data(), n);
      CHECK(same_bits(c1, c2));

      auto err = noise(g, n, -1e-6, 1e-6);
      CHECK(ref.scaled_max_error(err.data(), base.data(), c1.data(), 1e-10, 1e-8, n) ==
            t->scaled_max_error(err.data(), base.data(), c1.data(), 1e-10, 1e-8, n));

      double d1 = ref.dot(u.data(), src.data(), n), d2 = t->dot(u.data(), src.data(), n);
      CHECK(std::fabs(d1 - d2) <= 1e-13 * std::fabs(d1));
    }
  }
}

TEST_CASE("selection") {
  CHECK(kernels::available_backends().front() == kernels::Backend::scalar);
  auto keep = kernels::active().backend;
  CHECK(kernels::select(kernels::Backend::scalar));
  CHECK(kernels::active().backend == kernels::Backend::scalar);
  kernels::select(keep);
}

TEST_CASE("dopri5 on exponential decay") {
  Dopri5 ode(2, [](double, const double* y, double* d) {
    d[0] = -y[0];
    d[1] = y[0];
  });
  ode.reset(0.0, {1.0, 0.0});
  auto st = ode.integrate(2.0, 1e-3, nullptr);
  CHECK(st == Dopri5::Status::reached);
  CHECK(ode.y()[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-7));
  CHECK(ode.y()[1] == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-7));
}
