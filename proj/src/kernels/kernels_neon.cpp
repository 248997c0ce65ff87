#include "superheat/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace superheat::kernels {
namespace {

// Separate vmulq/vaddq (never vfmaq) keep lanes bit-identical to scalar code.

void stencil(const double* lo, const double* di, const double* up,
             const double* u, const double* src, double* out, std::size_t begin,
             std::size_t end) {
  std::size_t j = begin;
  for (; j + 2 <= end; j += 2) {
    float64x2_t acc = vmulq_f64(vld1q_f64(lo + j), vld1q_f64(u + j - 1));
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(di + j), vld1q_f64(u + j)));
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(up + j), vld1q_f64(u + j + 1)));
    vst1q_f64(out + j, vaddq_f64(acc, vld1q_f64(src + j)));
  }
  for (; j < end; ++j) {
    double acc = lo[j] * u[j - 1];
    acc = acc + di[j] * u[j];
    acc = acc + up[j] * u[j + 1];
    out[j] = acc + src[j];
  }
}

void combine(const double* base, double dt, const double* c,
             const double* const* ks, std::size_t m, double* out,
             std::size_t n) {
  const float64x2_t vdt = vdupq_n_f64(dt);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < m; ++k) {
      if (c[k] == 0.0) continue;
      acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(c[k]), vld1q_f64(ks[k] + i)));
    }
    float64x2_t b = base ? vld1q_f64(base + i) : vdupq_n_f64(0.0);
    vst1q_f64(out + i, vaddq_f64(b, vmulq_f64(vdt, acc)));
  }
  for (; i < n; ++i) {
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
  const float64x2_t va = vdupq_n_f64(atol);
  const float64x2_t vr = vdupq_n_f64(rtol);
  float64x2_t worst = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t m = vmaxq_f64(vabsq_f64(vld1q_f64(y0 + i)), vabsq_f64(vld1q_f64(y1 + i)));
    float64x2_t sc = vaddq_f64(va, vmulq_f64(vr, m));
    worst = vmaxq_f64(worst, vdivq_f64(vabsq_f64(vld1q_f64(err + i)), sc));
  }
  double w = std::max(vgetq_lane_f64(worst, 0), vgetq_lane_f64(worst, 1));
  for (; i < n; ++i) {
    double sc = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
    w = std::max(w, std::fabs(err[i]) / sc);
  }
  return w;
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    s = vaddq_f64(s, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double r = vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

const KernelTable table{Backend::neon, stencil, combine, scaled_max_error, dot};

}  // namespace

namespace detail {
const KernelTable* neon_table() { return &table; }
}

}  // namespace superheat::kernels

#else

namespace superheat::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace superheat::kernels::detail

#endif
