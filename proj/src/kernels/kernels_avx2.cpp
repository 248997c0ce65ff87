#include "superheat/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace superheat::kernels {
namespace {

// Every lane performs the same multiply and add sequence as the scalar
// loop, in the same order, so results are bit-identical. No FMA.

void stencil(const double* lo, const double* di, const double* up,
             const double* u, const double* src, double* out, std::size_t begin,
             std::size_t end) {
  std::size_t j = begin;
  for (; j + 4 <= end; j += 4) {
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(lo + j), _mm256_loadu_pd(u + j - 1));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(di + j), _mm256_loadu_pd(u + j)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(up + j), _mm256_loadu_pd(u + j + 1)));
    _mm256_storeu_pd(out + j, _mm256_add_pd(acc, _mm256_loadu_pd(src + j)));
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
  const __m256d vdt = _mm256_set1_pd(dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < m; ++k) {
      if (c[k] == 0.0) continue;
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(c[k]), _mm256_loadu_pd(ks[k] + i)));
    }
    __m256d b = base ? _mm256_loadu_pd(base + i) : _mm256_setzero_pd();
    _mm256_storeu_pd(out + i, _mm256_add_pd(b, _mm256_mul_pd(vdt, acc)));
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
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d va = _mm256_set1_pd(atol);
  const __m256d vr = _mm256_set1_pd(rtol);
  __m256d worst = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a0 = _mm256_andnot_pd(sign, _mm256_loadu_pd(y0 + i));
    __m256d a1 = _mm256_andnot_pd(sign, _mm256_loadu_pd(y1 + i));
    __m256d sc = _mm256_add_pd(va, _mm256_mul_pd(vr, _mm256_max_pd(a0, a1)));
    __m256d e = _mm256_andnot_pd(sign, _mm256_loadu_pd(err + i));
    worst = _mm256_max_pd(worst, _mm256_div_pd(e, sc));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, worst);
  double w = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) {
    double sc = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
    w = std::max(w, std::fabs(err[i]) / sc);
  }
  return w;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

const KernelTable table{Backend::avx2, stencil, combine, scaled_max_error, dot};

}  // namespace

namespace detail {
const KernelTable* avx2_table() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") ? &table : nullptr;
}
}  // namespace detail

}  // namespace superheat::kernels

#else

namespace superheat::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace superheat::kernels::detail

#endif
