#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "twpa/kernels/kernels.hpp"

namespace twpa::kernels {

namespace {

Backend detect() {
  if (const char* env = std::getenv("TWPA_KERNELS")) {
    if (std::string(env) == "scalar") return Backend::scalar;
  }
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

bool avx2_supported() {
#if defined(TWPA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

std::string_view backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

const KernelTable& table(Backend b) {
  if (b == Backend::avx2) {
#if defined(TWPA_HAVE_AVX2)
    if (avx2_supported()) return detail::avx2_table();
#endif
    throw std::runtime_error("AVX2 kernels are not available on this CPU");
  }
  return detail::scalar_table();
}

const KernelTable& table() { return table(active_backend()); }

void set_backend(Backend b) {
  (void)table(b);
  current().store(b, std::memory_order_relaxed);
}

}  // namespace twpa::kernels
