#include <atomic>
#include <cstdlib>
#include <string>

#include "bdcraft/error.hpp"
#include "bdcraft/simd/kernels.hpp"

namespace bdcraft::simd {
namespace {

std::atomic<Backend>& active_slot() {
  static std::atomic<Backend> slot{detect_backend()};
  return slot;
}

}  // namespace

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(BDCRAFT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

Backend detect_backend() {
  if (const char* forced = std::getenv("BDCRAFT_SIMD"); forced != nullptr && std::string(forced) == "scalar") {
    return Backend::Scalar;
  }
  return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

Backend active_backend() { return active_slot().load(std::memory_order_relaxed); }

void set_active_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw ConfigError("SIMD backend '" + std::string(to_string(backend)) + "' is not supported on this CPU");
  }
  active_slot().store(backend, std::memory_order_relaxed);
}

const KernelTable& kernels(Backend backend) {
  switch (backend) {
    case Backend::Avx2:
#if defined(BDCRAFT_HAVE_AVX2)
      if (backend_available(Backend::Avx2)) {
        return avx2_kernels();
      }
#endif
      throw ConfigError("avx2 kernels requested but unavailable");
    case Backend::Scalar:
      break;
  }
  return scalar_kernels();
}

const KernelTable& active_kernels() { return kernels(active_backend()); }

}  // namespace bdcraft::simd
