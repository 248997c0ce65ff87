#include <atomic>
#include <cstdlib>
#include <string>

#include "superheat/kernels.hpp"

namespace superheat::kernels {
namespace {

const KernelTable* pick_default() {
  if (const char* env = std::getenv("SUPERHEAT_SIMD")) {
    std::string want(env);
    if (want == "scalar") return &detail::scalar_table;
    if (want == "avx2" && detail::avx2_table()) return detail::avx2_table();
    if (want == "neon" && detail::neon_table()) return detail::neon_table();
  }
  if (const KernelTable* t = detail::avx2_table()) return t;
  if (const KernelTable* t = detail::neon_table()) return t;
  return &detail::scalar_table;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{pick_default()};
  return ptr;
}

}  // namespace

std::string_view name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::scalar};
  if (detail::avx2_table()) out.push_back(Backend::avx2);
  if (detail::neon_table()) out.push_back(Backend::neon);
  return out;
}

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar: return &detail::scalar_table;
    case Backend::avx2: return detail::avx2_table();
    case Backend::neon: return detail::neon_table();
  }
  return nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Backend b) {
  const KernelTable* t = table_for(b);
  if (!t) return false;
  current().store(t, std::memory_order_release);
  return true;
}

}  // namespace superheat::kernels
