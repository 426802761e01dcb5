#include "bdcraft/deconv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "bdcraft/error.hpp"
#include "bdcraft/simd/kernels.hpp"

namespace bdcraft {
namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// g(u, v) = sum over pixels where the shifted estimate is in range of
// ratio(x, y) * f(x - u + cx, y - v + cy): the gradient of the likelihood with
// respect to each PSF tap, with no border samples fabricated.
std::vector<double> psf_correlation(const Raster& ratio, const Raster& f, std::size_t kw, std::size_t kh) {
  const auto& k = simd::active_kernels();
  const auto w = static_cast<std::ptrdiff_t>(f.width());
  const auto h = static_cast<std::ptrdiff_t>(f.height());
  const auto cx = static_cast<std::ptrdiff_t>(kw / 2);
  const auto cy = static_cast<std::ptrdiff_t>(kh / 2);
  std::vector<double> g(kw * kh, 0.0);
  for (std::size_t v = 0; v < kh; ++v) {
    for (std::size_t u = 0; u < kw; ++u) {
      const std::ptrdiff_t sx = cx - static_cast<std::ptrdiff_t>(u);
      const std::ptrdiff_t sy = cy - static_cast<std::ptrdiff_t>(v);
      const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -sx);
      const std::ptrdiff_t x1 = std::min(w, w - sx);
      const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -sy);
      const std::ptrdiff_t y1 = std::min(h, h - sy);
      double acc = 0.0;
      if (x1 > x0) {
        for (std::ptrdiff_t y = y0; y < y1; ++y) {
          const double* r = ratio.row(static_cast<std::size_t>(y)).data() + x0;
          const double* s = f.row(static_cast<std::size_t>(y + sy)).data() + x0 + sx;
          acc += k.dot(r, s, static_cast<std::size_t>(x1 - x0));
        }
      }
      g[v * kw + u] = acc;
    }
  }
  return g;
}

Raster blur(const Raster& f, const Kernel& h) { return convolve2d(f, h, BorderPolicy::Replicate); }

void ratio_into(const Raster& observed, const Raster& blurred, double eps, Raster& ratio) {
  simd::active_kernels().ratio_floor(observed.samples().data(), blurred.samples().data(), eps,
                                     ratio.samples().data(), observed.size());
}

double mean_abs_diff(const Raster& a, const Raster& b) {
  const auto as = a.samples();
  const auto bs = b.samples();
  double acc = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i) {
    acc += std::abs(as[i] - bs[i]);
  }
  return acc / static_cast<double>(as.size());
}

}  // namespace

Psf::Psf(Kernel kernel) : kernel_(std::move(kernel)) {
  if (kernel_.cols() == 0 || kernel_.cols() > kMaxExtent || kernel_.rows() == 0 || kernel_.rows() > kMaxExtent) {
    throw InvalidInput("PSF extent must lie in 1..7 in both directions");
  }
  const auto w = kernel_.weights();
  if (std::any_of(w.begin(), w.end(), [](double v) { return v < 0.0; })) {
    throw InvalidInput("PSF weights must be non-negative");
  }
  if (std::abs(kernel_.sum() - 1.0) > 1e-9) {
    throw InvalidInput("PSF weights must sum to one");
  }
}

Psf Psf::uniform(std::size_t rows, std::size_t cols) {
  if (rows < 1 || rows > kMaxExtent || cols < 1 || cols > kMaxExtent) {
    throw ConfigError("PSF dimensions must lie in 1..7, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  const double w = 1.0 / static_cast<double>(rows * cols);
  return Psf(Kernel(cols, rows, std::vector<double>(rows * cols, w)));
}

std::string Psf::dims_label() const { return to_string(PsfDims{rows(), cols()}); }

PsfDims parse_psf_dims(std::string_view text) {
  const auto sep = text.find_first_of("xX,");
  auto parse = [&](std::string_view part) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError("malformed PSF dimensions '" + std::string(text) + "' (expected RxC, e.g. 1x3)");
    }
    return value;
  };
  if (sep == std::string_view::npos) {
    throw ConfigError("malformed PSF dimensions '" + std::string(text) + "' (expected RxC, e.g. 1x3)");
  }
  const PsfDims dims{parse(text.substr(0, sep)), parse(text.substr(sep + 1))};
  if (dims.rows < 1 || dims.rows > Psf::kMaxExtent || dims.cols < 1 || dims.cols > Psf::kMaxExtent) {
    throw ConfigError("PSF dimensions must lie in 1..7, got '" + std::string(text) + "'");
  }
  return dims;
}

std::string to_string(PsfDims dims) { return std::to_string(dims.rows) + "x" + std::to_string(dims.cols); }

Psf init_psf(std::size_t x, std::size_t y) { return Psf::uniform(x, y); }

Psf enforce_psf_constraints(const Kernel& h, bool symmetric) {
  std::vector<double> w(h.weights().begin(), h.weights().end());
  for (double& v : w) {
    v = std::max(v, 0.0);
  }
  if (symmetric) {
    const std::vector<double> rotated(w.rbegin(), w.rend());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = 0.5 * (w[i] + rotated[i]);
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("PSF estimate degenerated to zero");
  }
  for (double& v : w) {
    v /= total;
  }
  return Psf(Kernel(h.cols(), h.rows(), std::move(w)));
}

DeconvResult blind_deconvolve(const Raster& img, const Psf& psf0, const DeconvOptions& options) {
  if (options.iterations == 0) {
    throw ConfigError("blind deconvolution needs at least one iteration");
  }
  if (!(options.epsilon > 0.0)) {
    throw ConfigError("deconvolution epsilon must be positive");
  }
  if (img.empty()) {
    throw InvalidInput("cannot deconvolve an empty raster");
  }
  const auto& simd_k = simd::active_kernels();
  const double eps = options.epsilon;
  const std::size_t kw = psf0.cols();
  const std::size_t kh = psf0.rows();

  Raster observed = img;
  for (double& v : observed.samples()) {
    v = std::max(v, eps);
  }
  Raster estimate = observed;
  Psf psf = psf0;
  Raster ratio(img.width(), img.height(), 0.0);
  Raster blurred = blur(estimate, psf.kernel());
  std::vector<double> trace;
  trace.reserve(options.iterations);

  for (std::size_t it = 1; it <= options.iterations; ++it) {
    ratio_into(observed, blurred, eps, ratio);
    const Raster back = correlate2d_anchored(ratio, psf.kernel(), BorderPolicy::Replicate, kw / 2, kh / 2);
    simd_k.multiply_clamp(estimate.samples().data(), back.samples().data(), estimate.size());
    if (!all_finite(estimate.samples())) {
      throw NumericError("blind deconvolution produced a non-finite image at iteration " + std::to_string(it));
    }

    blurred = blur(estimate, psf.kernel());
    ratio_into(observed, blurred, eps, ratio);
    std::vector<double> g = psf_correlation(ratio, estimate, kw, kh);
    const auto w = psf.weights();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] *= w[i];
    }
    if (!all_finite(g)) {
      throw NumericError("blind deconvolution produced a non-finite PSF at iteration " + std::to_string(it));
    }
    try {
      psf = enforce_psf_constraints(Kernel(kw, kh, std::move(g)), options.symmetric_psf);
    } catch (const NumericError&) {
      throw NumericError("blind deconvolution PSF estimate vanished at iteration " + std::to_string(it));
    }

    blurred = blur(estimate, psf.kernel());
    trace.push_back(mean_abs_diff(observed, blurred));
  }

  for (double& v : estimate.samples()) {
    v = std::clamp(v, 0.0, 1.0);
  }
  return DeconvResult{std::move(estimate), std::move(psf), options.iterations, std::move(trace)};
}

double reblur_residual(const Raster& observed, const Raster& estimate, const Psf& psf) {
  if (!observed.same_shape(estimate)) {
    throw InvalidInput("residual needs equally sized rasters");
  }
  return mean_abs_diff(observed, blur(estimate, psf.kernel()));
}

}  // namespace bdcraft
