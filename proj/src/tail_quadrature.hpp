#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>

#include "superheat/error.hpp"

namespace superheat::detail {

struct TailResult {
  double value = 0.0;
  int panels = 0;
};

// int_0^inf g(x) dx for an integrand whose panel sums contract at least
// geometrically. Panels are [(2^k - 1) w, (2^{k+1} - 1) w]; once the
// contraction ratio is stable the remaining tail is summed as a geometric
// series. Accuracy is tol relative to max(|result|, scale).
template <class G>
TailResult integrate_tail(G&& g, double w, double tol, double scale = 0.0) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr int kMaxPanels = 400;
  // Below this the 21-point error estimate is roundoff and recursion runs away.
  tol = std::max(tol, 2e-13);
  double sum = 0.0;
  double prev = 0.0;
  double prev_rho = NAN;
  int stuck = 0;
  for (int k = 0; k < kMaxPanels; ++k) {
    // Integrate in t = x / w: the error estimate misbehaves on very narrow panels.
    double a = std::ldexp(1.0, k) - 1.0;
    double b = std::ldexp(1.0, k + 1) - 1.0;
    if (!std::isfinite(b * w)) break;
    auto gt = [&](double t) { return g(t * w); };
    double p;
    if (scale > 0.0) {
      // Absolute target: accept the plain 21-point rule when it already
      // meets it, otherwise refine only as far as the target requires.
      double l1 = 0.0, err = 0.0;
      double rough = gauss_kronrod<double, 21>::integrate(gt, a, b, 0, 1.0, &err, &l1);
      double target = 0.05 * tol * std::max(std::fabs(sum), scale);
      if (w * err <= target) {
        p = w * rough;
      } else {
        double rel = std::max(target / std::max(w * l1, 1e-300), 0.05 * tol);
        p = w * gauss_kronrod<double, 21>::integrate(gt, a, b, 8, rel);
      }
    } else {
      p = w * gauss_kronrod<double, 21>::integrate(gt, a, b, 12, 0.05 * tol);
    }
    if (!std::isfinite(p)) fail(ErrorCode::divergent_integral, "non-finite panel in tail integral");
    sum += p;
    double ref = std::max(std::fabs(sum), scale);
    double ap = std::fabs(p);
    if (ap == 0.0 || ap <= 1e-3 * tol * ref) return {sum, k + 1};
    if (k >= 2 && prev != 0.0) {
      double rho = ap / std::fabs(prev);
      if (rho < 1.0) {
        stuck = 0;
        double tail = ap * rho / (1.0 - rho);
        if (tail <= 0.1 * tol * ref) return {sum + std::copysign(tail, p), k + 1};
        if (std::isfinite(prev_rho) && rho < 0.9999 && k >= 6) {
          double slack = ap * std::fabs(rho - prev_rho) / ((1.0 - rho) * (1.0 - rho));
          if (slack <= 0.1 * tol * ref) return {sum + std::copysign(tail, p), k + 1};
        }
      } else if (++stuck > 40) {
        fail(ErrorCode::divergent_integral, "tail panels do not contract");
      }
      prev_rho = rho;
    }
    prev = p;
  }
  fail(ErrorCode::divergent_integral, "tail integral did not converge");
}

}  // namespace superheat::detail
