#include <algorithm>

#include "bdcraft/simd/kernels.hpp"

namespace bdcraft::simd {
namespace {

void correlate_valid(const double* src, std::size_t src_stride, std::size_t out_w, std::size_t out_h,
                     const double* taps, std::size_t kw, std::size_t kh, double* dst) {
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t v = 0; v < kh; ++v) {
        const double* s = src + (y + v) * src_stride + x;
        const double* t = taps + v * kw;
        for (std::size_t u = 0; u < kw; ++u) {
          acc = acc + t[u] * s[u];
        }
      }
      dst[y * out_w + x] = acc;
    }
  }
}

void laplacian4(const double* src, std::size_t stride, std::size_t w, std::size_t h, double* dst) {
  for (std::size_t y = 0; y < h; ++y) {
    const double* up = src + y * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = dst + y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const double vertical = up[x] + down[x];
      const double horizontal = mid[x - 1] + mid[x + 1];
      out[x] = (vertical + horizontal) - 4.0 * mid[x];
    }
  }
}

void laplacian8(const double* src, std::size_t stride, std::size_t w, std::size_t h, double* dst) {
  for (std::size_t y = 0; y < h; ++y) {
    const double* up = src + y * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = dst + y * w;
    for (std::size_t x = 0; x < w; ++x) {
      const double diag = (up[x - 1] + down[x + 1]) + (up[x + 1] + down[x - 1]);
      const double cross = (up[x] + down[x]) + (mid[x - 1] + mid[x + 1]);
      out[x] = (diag + cross) - 8.0 * mid[x];
    }
  }
}

void ratio_floor(const double* num, const double* den, double floor, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = num[i] / std::max(den[i], floor);
  }
}

void multiply_clamp(double* acc, const double* factor, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = std::max(acc[i] * factor[i], 0.0);
  }
}

void scale(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a[i] * s;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{correlate_valid, laplacian4, laplacian8, ratio_floor, multiply_clamp, scale, dot};
  return table;
}

}  // namespace bdcraft::simd
