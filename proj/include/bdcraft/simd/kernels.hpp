#pragma once

// Inner loops shared by the raster, focus and deconvolution modules. Each
// routine has a scalar reference and, where the CPU allows, a vectorised
// variant. Element-wise and per-pixel routines are bit-identical across
// backends (same operation order per output, no FMA); `dot` is a reduction
// and agrees only to rounding.

#include <cstddef>
#include <string_view>

namespace bdcraft::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  /// dst(x, y) = sum_{v,u} taps[v*kw+u] * src[(y+v)*src_stride + x+u], taps
  /// accumulated row-major starting from +0.0.
  void (*correlate_valid)(const double* src, std::size_t src_stride, std::size_t out_w, std::size_t out_h,
                          const double* taps, std::size_t kw, std::size_t kh, double* dst);

  /// 4-neighbour Laplacian on a 1-pixel padded source, summed as
  /// ((up + down) + (left + right)) - 4c so the result is mirror-symmetric.
  void (*laplacian4)(const double* src, std::size_t src_stride, std::size_t w, std::size_t h, double* dst);

  /// 8-neighbour Laplacian, summed as
  /// ((ul + dr) + (ur + dl)) + ((up + down) + (left + right)) - 8c.
  void (*laplacian8)(const double* src, std::size_t src_stride, std::size_t w, std::size_t h, double* dst);

  /// out[i] = num[i] / max(den[i], floor)
  void (*ratio_floor)(const double* num, const double* den, double floor, double* out, std::size_t n);

  /// acc[i] = max(acc[i] * factor[i], 0)
  void (*multiply_clamp)(double* acc, const double* factor, std::size_t n);

  /// out[i] = a[i] * s
  void (*scale)(const double* a, double s, double* out, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(BDCRAFT_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool backend_available(Backend backend);
std::string_view to_string(Backend backend);

/// Best backend the running CPU supports, unless BDCRAFT_SIMD=scalar is set.
Backend detect_backend();

Backend active_backend();
/// Throws ConfigError if the backend is unavailable on this CPU.
void set_active_backend(Backend backend);

const KernelTable& kernels(Backend backend);
const KernelTable& active_kernels();

}  // namespace bdcraft::simd
