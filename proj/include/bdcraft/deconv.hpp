#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bdcraft/raster.hpp"

namespace bdcraft {

/// Non-negative point spread function with unit sum, at most 7x7.
class Psf {
 public:
  static constexpr std::size_t kMaxExtent = 7;

  /// Validates non-negativity, unit sum (within 1e-9) and extent.
  explicit Psf(Kernel kernel);

  /// Uniform ("array of ones") initial estimate spanning `rows` pixels
  /// vertically and `cols` pixels horizontally.
  static Psf uniform(std::size_t rows, std::size_t cols);

  const Kernel& kernel() const noexcept { return kernel_; }
  std::size_t rows() const noexcept { return kernel_.rows(); }
  std::size_t cols() const noexcept { return kernel_.cols(); }
  std::span<const double> weights() const noexcept { return kernel_.weights(); }

  /// "RxC", e.g. "1x3".
  std::string dims_label() const;

  friend bool operator==(const Psf&, const Psf&) = default;

 private:
  Kernel kernel_;
};

/// PSF dimensions in (rows, cols) order; "1x3" parses to {1, 3}.
struct PsfDims {
  std::size_t rows = 1;
  std::size_t cols = 1;

  friend auto operator<=>(const PsfDims&, const PsfDims&) = default;
};

PsfDims parse_psf_dims(std::string_view text);
std::string to_string(PsfDims dims);

/// Uniform PSF with `rows` = x and `cols` = y; throws ConfigError outside 1..7.
Psf init_psf(std::size_t x, std::size_t y);

/// Clamps negatives to zero, optionally averages with the 180-degree
/// rotation, then renormalises. Accepts an arbitrary kernel (it need not be a
/// valid Psf yet). Throws NumericError if nothing positive remains.
Psf enforce_psf_constraints(const Kernel& h, bool symmetric);

struct DeconvOptions {
  std::size_t iterations = 10;
  bool symmetric_psf = false;
  /// Floor for the observed image and for every ratio denominator.
  double epsilon = 1e-6;
};

struct DeconvResult {
  Raster restored;
  Psf psf_estimate;
  std::size_t iterations_run = 0;
  /// mean |observed - restored (*) psf| after each iteration
  std::vector<double> objective_trace;
};

/// Alternating Richardson-Lucy blind deconvolution.
///
/// Each iteration performs an image update against the current PSF followed
/// by a PSF update against the new image:
///
///   f <- f * adjoint(d / (f (*) h), h)            (Replicate border)
///   h <- h * valid_corr(d / (f (*) h), f)          (PSF support only)
///
/// with negatives clamped and h renormalised after every step. The observed
/// image is floored at `epsilon` first; the restored image is clamped to
/// [0, 1] only on return. Throws ConfigError for zero iterations and
/// NumericError, naming the iteration, if the state stops being finite.
DeconvResult blind_deconvolve(const Raster& img, const Psf& psf0, const DeconvOptions& options = {});

inline DeconvResult blind_deconvolve(const Raster& img, const Psf& psf0, std::size_t iterations) {
  return blind_deconvolve(img, psf0, DeconvOptions{.iterations = iterations});
}

/// mean |observed - convolve2d(estimate, psf)| under Replicate border.
double reblur_residual(const Raster& observed, const Raster& estimate, const Psf& psf);

}  // namespace bdcraft
