#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Data-parallel inner loops shared by the time stepper, the embedded
// Runge-Kutta integrator and the Picard convolution. Each backend must give
// bit-identical results to the scalar reference for stencil, combine and
// scaled_max_error; dot may differ by reassociation only.
namespace superheat::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;

  // out[j] = lo[j]*u[j-1] + di[j]*u[j] + up[j]*u[j+1] + src[j] for j in [begin, end).
  void (*stencil)(const double* lo, const double* di, const double* up,
                  const double* u, const double* src, double* out,
                  std::size_t begin, std::size_t end);

  // out[i] = base[i] + dt * sum_k c[k] * ks[k][i]; base may be null (treated as 0).
  // Terms with c[k] == 0 are skipped.
  void (*combine)(const double* base, double dt, const double* c,
                  const double* const* ks, std::size_t m, double* out,
                  std::size_t n);

  // max_i |err[i]| / (atol + rtol * max(|y0[i]|, |y1[i]|)).
  double (*scaled_max_error)(const double* err, const double* y0,
                             const double* y1, double atol, double rtol,
                             std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);
};

std::string_view name(Backend b);

// Backends compiled in and supported by the running CPU; scalar is always first.
std::vector<Backend> available_backends();

// nullptr when the backend is not available on this machine.
const KernelTable* table_for(Backend b);

// The table used by the library. Chosen once from the CPU, overridable with
// SUPERHEAT_SIMD=scalar|avx2|neon or select().
const KernelTable& active();

// Returns false (and leaves the selection unchanged) if b is unavailable.
bool select(Backend b);

namespace detail {
extern const KernelTable scalar_table;
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace superheat::kernels
