#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bdcraft/eval.hpp"
#include "bdcraft/raster.hpp"

namespace bdcraft {

enum class BlurKind { None, Box, Gaussian };

struct BlurSpec {
  BlurKind kind = BlurKind::None;
  std::size_t rows = 1;
  std::size_t cols = 1;
  double sigma = 0.0;

  /// Normalised kernel; 1x1 identity for BlurKind::None.
  Kernel kernel() const;
  /// "none", "box:1x3" or "gaussian:1.5".
  std::string label() const;

  static BlurSpec box(std::size_t rows, std::size_t cols) { return {BlurKind::Box, rows, cols, 0.0}; }
  /// Square kernel of side 2 * ceil(3 sigma) + 1.
  static BlurSpec gaussian(double sigma);
};

Raster apply_blur(const Raster& sharp, const BlurSpec& spec);

struct SyntheticSample {
  std::string image_id;
  Raster sharp;
  /// `sharp` after `blur`; equal to `sharp` for unblurred samples.
  Raster observed;
  ImageAnnotations ground_truth;
  BlurSpec blur;
};

inline constexpr std::size_t kSynthWidth = 160;
inline constexpr std::size_t kSynthHeight = 120;

/// Light background with dark glyph-like strokes grouped into words; the
/// ground truth holds each word's exact bounding box. Odd indices are
/// blurred, cycling through box 3x3, 3x5, 5x3 and Gaussian sigma 1.0 / 1.5.
/// Pure in (index, seed).
SyntheticSample render_synthetic_sample(std::size_t index, std::uint64_t seed);

struct CorpusEntry {
  std::string image_id;
  std::string image_file;
  std::string gt_file;
  bool blurred = false;
  std::string blur;
  std::size_t kernel_rows = 1;
  std::size_t kernel_cols = 1;
  std::size_t boxes = 0;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  std::vector<CorpusEntry> entries;
};

/// Writes img_<k>.png, gt_img_<k>.txt (ICDAR 2013 layout) and manifest.json
/// for k = 1..n. Byte-identical for equal (n, seed). Throws ConfigError for
/// n == 0 and DataError if the directory is not writable.
CorpusManifest generate_synthetic_corpus(std::size_t n, std::uint64_t seed, const std::filesystem::path& out);

/// ICDAR 2013 ground-truth text for a set of boxes.
std::string format_gt_icdar2013(const ImageAnnotations& gt);

}  // namespace bdcraft
