#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace bdcraft {

/// Single-channel floating-point image, row-major. Intensities are nominally
/// in [0, 1] but the type does not clamp them.
class Raster {
 public:
  Raster() = default;
  Raster(std::size_t width, std::size_t height, double fill = 0.0);
  /// Takes ownership of `samples`; throws InvalidInput on a size mismatch or a
  /// non-finite sample.
  Raster(std::size_t width, std::size_t height, std::vector<double> samples);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  double operator()(std::size_t x, std::size_t y) const noexcept { return samples_[y * width_ + x]; }
  double& operator()(std::size_t x, std::size_t y) noexcept { return samples_[y * width_ + x]; }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<double> samples() noexcept { return samples_; }
  std::span<const double> row(std::size_t y) const noexcept {
    return std::span<const double>(samples_).subspan(y * width_, width_);
  }
  std::span<double> row(std::size_t y) noexcept { return std::span<double>(samples_).subspan(y * width_, width_); }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> samples_;
};

/// Small dense filter kernel, row-major, `cols` wide and `rows` tall.
class Kernel {
 public:
  Kernel() = default;
  Kernel(std::size_t cols, std::size_t rows, std::vector<double> weights);

  std::size_t cols() const noexcept { return cols_; }
  std::size_t rows() const noexcept { return rows_; }
  double operator()(std::size_t u, std::size_t v) const noexcept { return weights_[v * cols_ + u]; }
  std::span<const double> weights() const noexcept { return weights_; }
  double sum() const noexcept;

  /// 180-degree rotation.
  Kernel flipped() const;

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> weights_;
};

enum class BorderPolicy { Replicate, Reflect, ZeroPad };

BorderPolicy parse_border_policy(std::string_view name);
std::string_view to_string(BorderPolicy policy);

/// BT.601 luma of three equally sized channels.
Raster to_grayscale(const Raster& r, const Raster& g, const Raster& b);

/// Same-size correlation with an explicit anchor: the output at (x, y) is
/// sum over taps of k(u, v) * img(x + u - anchor_x, y + v - anchor_y).
Raster correlate2d_anchored(const Raster& img, const Kernel& k, BorderPolicy border, std::size_t anchor_x,
                            std::size_t anchor_y);

/// Same-size correlation, anchored at ((cols - 1) / 2, (rows - 1) / 2).
Raster correlate2d(const Raster& img, const Kernel& k, BorderPolicy border = BorderPolicy::Replicate);

/// Same-size true convolution centred at (cols / 2, rows / 2). Defined as
/// correlate2d with the flipped kernel, so the two agree bit for bit.
Raster convolve2d(const Raster& img, const Kernel& k, BorderPolicy border = BorderPolicy::Replicate);

/// Copy of `img` extended by the given margins, filled per `border`.
Raster pad(const Raster& img, std::size_t left, std::size_t top, std::size_t right, std::size_t bottom,
           BorderPolicy border);

Raster flip_horizontal(const Raster& img);
Raster flip_vertical(const Raster& img);
double mean(const Raster& img);

}  // namespace bdcraft
