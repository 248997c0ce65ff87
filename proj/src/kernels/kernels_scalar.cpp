#include <algorithm>
#include <cmath>

#include "superheat/kernels.hpp"

namespace superheat::kernels {
namespace {

void stencil(const double* lo, const double* di, const double* up,
             const double* u, const double* src, double* out, std::size_t begin,
             std::size_t end) {
  for (std::size_t j = begin; j < end; ++j) {
    double acc = lo[j] * u[j - 1];
    acc = acc + di[j] * u[j];
    acc = acc + up[j] * u[j + 1];
    out[j] = acc + src[j];
  }
}

void combine(const double* base, double dt, const double* c,
             const double* const* ks, std::size_t m, double* out,
             std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (c[k] == 0.0) continue;
      acc = acc + c[k] * ks[k][i];
    }
    out[i] = (base ? base[i] : 0.0) + dt * acc;
  }
}

double scaled_max_error(const double* err, const double* y0, const double* y1,
                        double atol, double rtol, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sc = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
    worst = std::max(worst, std::fabs(err[i]) / sc);
  }
  return worst;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Backend::scalar, stencil, combine,
                               scaled_max_error, dot};
}

}  // namespace superheat::kernels
