#include <immintrin.h>

#include <algorithm>

#include "bdcraft/simd/kernels.hpp"

namespace bdcraft::simd {
namespace {

constexpr std::size_t kLanes = 4;

void correlate_valid(const double* src, std::size_t src_stride, std::size_t out_w, std::size_t out_h,
                     const double* taps, std::size_t kw, std::size_t kh, double* dst) {
  for (std::size_t y = 0; y < out_h; ++y) {
    std::size_t x = 0;
    for (; x + kLanes <= out_w; x += kLanes) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t v = 0; v < kh; ++v) {
        const double* s = src + (y + v) * src_stride + x;
        const double* t = taps + v * kw;
        for (std::size_t u = 0; u < kw; ++u) {
          acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(t[u]), _mm256_loadu_pd(s + u)));
        }
      }
      _mm256_storeu_pd(dst + y * out_w + x, acc);
    }
    for (; x < out_w; ++x) {
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
  const __m256d four = _mm256_set1_pd(4.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* up = src + y * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = dst + y * w;
    std::size_t x = 0;
    for (; x + kLanes <= w; x += kLanes) {
      const __m256d vertical = _mm256_add_pd(_mm256_loadu_pd(up + x), _mm256_loadu_pd(down + x));
      const __m256d horizontal = _mm256_add_pd(_mm256_loadu_pd(mid + x - 1), _mm256_loadu_pd(mid + x + 1));
      const __m256d centre = _mm256_mul_pd(four, _mm256_loadu_pd(mid + x));
      _mm256_storeu_pd(out + x, _mm256_sub_pd(_mm256_add_pd(vertical, horizontal), centre));
    }
    for (; x < w; ++x) {
      const double vertical = up[x] + down[x];
      const double horizontal = mid[x - 1] + mid[x + 1];
      out[x] = (vertical + horizontal) - 4.0 * mid[x];
    }
  }
}

void laplacian8(const double* src, std::size_t stride, std::size_t w, std::size_t h, double* dst) {
  const __m256d eight = _mm256_set1_pd(8.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* up = src + y * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = dst + y * w;
    std::size_t x = 0;
    for (; x + kLanes <= w; x += kLanes) {
      const __m256d d1 = _mm256_add_pd(_mm256_loadu_pd(up + x - 1), _mm256_loadu_pd(down + x + 1));
      const __m256d d2 = _mm256_add_pd(_mm256_loadu_pd(up + x + 1), _mm256_loadu_pd(down + x - 1));
      const __m256d c1 = _mm256_add_pd(_mm256_loadu_pd(up + x), _mm256_loadu_pd(down + x));
      const __m256d c2 = _mm256_add_pd(_mm256_loadu_pd(mid + x - 1), _mm256_loadu_pd(mid + x + 1));
      const __m256d sum = _mm256_add_pd(_mm256_add_pd(d1, d2), _mm256_add_pd(c1, c2));
      _mm256_storeu_pd(out + x, _mm256_sub_pd(sum, _mm256_mul_pd(eight, _mm256_loadu_pd(mid + x))));
    }
    for (; x < w; ++x) {
      const double diag = (up[x - 1] + down[x + 1]) + (up[x + 1] + down[x - 1]);
      const double cross = (up[x] + down[x]) + (mid[x - 1] + mid[x + 1]);
      out[x] = (diag + cross) - 8.0 * mid[x];
    }
  }
}

// _mm256_max_pd(a, b) yields b when either operand is NaN, which matches
// std::max(b, a) in the scalar reference.
void ratio_floor(const double* num, const double* den, double floor, double* out, std::size_t n) {
  const __m256d lo = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_max_pd(lo, _mm256_loadu_pd(den + i));
    _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(num + i), d));
  }
  for (; i < n; ++i) {
    out[i] = num[i] / std::max(den[i], floor);
  }
}

void multiply_clamp(double* acc, const double* factor, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(factor + i));
    _mm256_storeu_pd(acc + i, _mm256_max_pd(zero, p));
  }
  for (; i < n; ++i) {
    acc[i] = std::max(acc[i] * factor[i], 0.0);
  }
}

void scale(const double* a, double s, double* out, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), sv));
  }
  for (; i < n; ++i) {
    out[i] = a[i] * s;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + kLanes), _mm256_loadu_pd(b + i + kLanes)));
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{correlate_valid, laplacian4, laplacian8, ratio_floor, multiply_clamp, scale, dot};
  return table;
}

}  // namespace bdcraft::simd
