#include "bdcraft/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bdcraft/error.hpp"
#include "bdcraft/simd/kernels.hpp"

namespace bdcraft {
namespace {

// Maps an out-of-range coordinate onto [0, n) per the border policy; returns
// n for ZeroPad reads outside the image.
std::size_t resolve(std::ptrdiff_t i, std::size_t n, BorderPolicy border) {
  const auto len = static_cast<std::ptrdiff_t>(n);
  if (i >= 0 && i < len) {
    return static_cast<std::size_t>(i);
  }
  switch (border) {
    case BorderPolicy::Replicate:
      return i < 0 ? 0 : n - 1;
    case BorderPolicy::Reflect: {
      // Edge sample repeated: ... c b a | a b c ... | c b a ...
      const std::ptrdiff_t period = 2 * len;
      std::ptrdiff_t m = i % period;
      if (m < 0) {
        m += period;
      }
      return static_cast<std::size_t>(m < len ? m : period - 1 - m);
    }
    case BorderPolicy::ZeroPad:
      return n;
  }
  return n;
}

}  // namespace

Raster::Raster(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), samples_(width * height, fill) {
  if (width == 0 || height == 0) {
    throw InvalidInput("raster dimensions must be at least 1x1");
  }
  if (!std::isfinite(fill)) {
    throw InvalidInput("raster fill value must be finite");
  }
}

Raster::Raster(std::size_t width, std::size_t height, std::vector<double> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  if (width == 0 || height == 0) {
    throw InvalidInput("raster dimensions must be at least 1x1");
  }
  if (samples_.size() != width * height) {
    throw InvalidInput("raster sample count " + std::to_string(samples_.size()) + " does not match " +
                       std::to_string(width) + "x" + std::to_string(height));
  }
  if (!std::all_of(samples_.begin(), samples_.end(), [](double s) { return std::isfinite(s); })) {
    throw InvalidInput("raster samples must be finite");
  }
}

Kernel::Kernel(std::size_t cols, std::size_t rows, std::vector<double> weights)
    : cols_(cols), rows_(rows), weights_(std::move(weights)) {
  if (cols == 0 || rows == 0) {
    throw InvalidInput("kernel dimensions must be at least 1x1");
  }
  if (weights_.size() != cols * rows) {
    throw InvalidInput("kernel weight count does not match its dimensions");
  }
  if (!std::all_of(weights_.begin(), weights_.end(), [](double w) { return std::isfinite(w); })) {
    throw InvalidInput("kernel weights must be finite");
  }
}

double Kernel::sum() const noexcept { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

Kernel Kernel::flipped() const {
  std::vector<double> w(weights_.rbegin(), weights_.rend());
  return Kernel(cols_, rows_, std::move(w));
}

BorderPolicy parse_border_policy(std::string_view name) {
  if (name == "replicate") return BorderPolicy::Replicate;
  if (name == "reflect") return BorderPolicy::Reflect;
  if (name == "zero" || name == "zeropad") return BorderPolicy::ZeroPad;
  throw ConfigError("unknown border policy '" + std::string(name) + "'");
}

std::string_view to_string(BorderPolicy policy) {
  switch (policy) {
    case BorderPolicy::Replicate:
      return "replicate";
    case BorderPolicy::Reflect:
      return "reflect";
    case BorderPolicy::ZeroPad:
      return "zero";
  }
  return "unknown";
}

Raster to_grayscale(const Raster& r, const Raster& g, const Raster& b) {
  if (!r.same_shape(g) || !r.same_shape(b)) {
    throw InvalidInput("colour channels differ in size");
  }
  std::vector<double> out(r.size());
  const auto rs = r.samples();
  const auto gs = g.samples();
  const auto bs = b.samples();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.299 * rs[i] + 0.587 * gs[i] + 0.114 * bs[i];
  }
  return Raster(r.width(), r.height(), std::move(out));
}

Raster pad(const Raster& img, std::size_t left, std::size_t top, std::size_t right, std::size_t bottom,
           BorderPolicy border) {
  const std::size_t w = img.width() + left + right;
  const std::size_t h = img.height() + top + bottom;
  std::vector<std::size_t> xs(w);
  for (std::size_t x = 0; x < w; ++x) {
    xs[x] = resolve(static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(left), img.width(), border);
  }
  Raster out(w, h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy =
        resolve(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(top), img.height(), border);
    if (sy == img.height()) {
      continue;
    }
    auto dst = out.row(y);
    const auto src = img.row(sy);
    for (std::size_t x = 0; x < w; ++x) {
      dst[x] = xs[x] == img.width() ? 0.0 : src[xs[x]];
    }
  }
  return out;
}

Raster correlate2d_anchored(const Raster& img, const Kernel& k, BorderPolicy border, std::size_t anchor_x,
                            std::size_t anchor_y) {
  if (img.empty() || k.weights().empty()) {
    throw InvalidInput("correlation needs a non-empty image and kernel");
  }
  if (anchor_x >= k.cols() || anchor_y >= k.rows()) {
    throw InvalidInput("kernel anchor lies outside the kernel");
  }
  if (border == BorderPolicy::Reflect && (k.cols() > 2 * img.width() || k.rows() > 2 * img.height())) {
    throw InvalidInput("kernel exceeds twice the image extent under reflect border");
  }
  const Raster padded =
      pad(img, anchor_x, anchor_y, k.cols() - 1 - anchor_x, k.rows() - 1 - anchor_y, border);
  std::vector<double> out(img.size());
  simd::active_kernels().correlate_valid(padded.samples().data(), padded.width(), img.width(), img.height(),
                                         k.weights().data(), k.cols(), k.rows(), out.data());
  return Raster(img.width(), img.height(), std::move(out));
}

Raster correlate2d(const Raster& img, const Kernel& k, BorderPolicy border) {
  return correlate2d_anchored(img, k, border, (k.cols() - 1) / 2, (k.rows() - 1) / 2);
}

Raster convolve2d(const Raster& img, const Kernel& k, BorderPolicy border) {
  return correlate2d(img, k.flipped(), border);
}

Raster flip_horizontal(const Raster& img) {
  Raster out = img;
  for (std::size_t y = 0; y < img.height(); ++y) {
    auto r = out.row(y);
    std::reverse(r.begin(), r.end());
  }
  return out;
}

Raster flip_vertical(const Raster& img) {
  Raster out = img;
  for (std::size_t y = 0; y < img.height(); ++y) {
    const auto src = img.row(img.height() - 1 - y);
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

double mean(const Raster& img) {
  const auto s = img.samples();
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

}  // namespace bdcraft
