#pragma once

#include <span>
#include <string_view>

#include "bdcraft/raster.hpp"

namespace bdcraft {

enum class LaplacianKind { FourNeighbor, EightNeighbor };

enum class FocusLabel { Blurry, NonBlurry };

std::string_view to_string(FocusLabel label);
LaplacianKind parse_laplacian_kind(std::string_view name);

inline constexpr double kDefaultBlurThreshold = 100.0;

struct FocusVerdict {
  double measure = 0.0;
  double threshold = kDefaultBlurThreshold;
  FocusLabel label = FocusLabel::Blurry;
};

/// 3x3 Laplacian stencil under Replicate border. The four-neighbour form is
/// [[0,1,0],[1,-4,1],[0,1,0]]; the eight-neighbour form has -8 at the centre.
Raster laplacian_response(const Raster& img, LaplacianKind kind = LaplacianKind::FourNeighbor);

/// Population variance of the Laplacian response computed on 0-255 scaled
/// intensities. Summation runs over the sorted responses, so the value is
/// invariant to any rearrangement of pixels that leaves the multiset of
/// responses unchanged (flips in particular). Throws InvalidInput for a
/// single-pixel image.
double focus_measure(const Raster& img, LaplacianKind kind = LaplacianKind::FourNeighbor);

/// Strict comparison: NonBlurry iff measure > threshold.
FocusVerdict classify_measure(double measure, double threshold = kDefaultBlurThreshold);

FocusVerdict classify(const Raster& img, double threshold = kDefaultBlurThreshold,
                      LaplacianKind kind = LaplacianKind::FourNeighbor);

/// Unsupervised threshold for a set of focus measures: Otsu's split of a
/// 256-bin histogram of log10(measure). Measures <= 0 are placed in the lowest
/// bin. Requires at least two values.
double calibrate_threshold(std::span<const double> measures);

}  // namespace bdcraft
