#include "bdcraft/focus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bdcraft/error.hpp"
#include "bdcraft/simd/kernels.hpp"

namespace bdcraft {

std::string_view to_string(FocusLabel label) { return label == FocusLabel::Blurry ? "blurry" : "non-blurry"; }

LaplacianKind parse_laplacian_kind(std::string_view name) {
  if (name == "4" || name == "four") return LaplacianKind::FourNeighbor;
  if (name == "8" || name == "eight") return LaplacianKind::EightNeighbor;
  throw ConfigError("unknown Laplacian kind '" + std::string(name) + "' (expected 4 or 8)");
}

Raster laplacian_response(const Raster& img, LaplacianKind kind) {
  if (img.empty()) {
    throw InvalidInput("Laplacian of an empty raster");
  }
  const Raster padded = pad(img, 1, 1, 1, 1, BorderPolicy::Replicate);
  std::vector<double> out(img.size());
  const auto& k = simd::active_kernels();
  const auto fn = kind == LaplacianKind::FourNeighbor ? k.laplacian4 : k.laplacian8;
  fn(padded.samples().data(), padded.width(), img.width(), img.height(), out.data());
  return Raster(img.width(), img.height(), std::move(out));
}

double focus_measure(const Raster& img, LaplacianKind kind) {
  if (img.size() < 2) {
    throw InvalidInput("focus measure needs at least two pixels");
  }
  Raster scaled = img;
  simd::active_kernels().scale(img.samples().data(), 255.0, scaled.samples().data(), img.size());
  const Raster response = laplacian_response(scaled, kind);

  std::vector<double> values(response.samples().begin(), response.samples().end());
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  const double mu = sum / n;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mu;
    ss += d * d;
  }
  return ss / n;
}

FocusVerdict classify_measure(double measure, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("blur threshold must be positive, got " + std::to_string(threshold));
  }
  if (!(measure >= 0.0)) {
    throw InvalidInput("focus measure must be non-negative");
  }
  return FocusVerdict{measure, threshold, measure > threshold ? FocusLabel::NonBlurry : FocusLabel::Blurry};
}

FocusVerdict classify(const Raster& img, double threshold, LaplacianKind kind) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("blur threshold must be positive, got " + std::to_string(threshold));
  }
  return classify_measure(focus_measure(img, kind), threshold);
}

double calibrate_threshold(std::span<const double> measures) {
  if (measures.size() < 2) {
    throw InvalidInput("threshold calibration needs at least two measures");
  }
  constexpr std::size_t kBins = 256;
  std::vector<double> logs;
  logs.reserve(measures.size());
  double floor_log = std::numeric_limits<double>::infinity();
  for (double m : measures) {
    if (m > 0.0) {
      floor_log = std::min(floor_log, std::log10(m));
    }
  }
  if (!std::isfinite(floor_log)) {
    throw InvalidInput("threshold calibration needs at least one positive measure");
  }
  for (double m : measures) {
    logs.push_back(m > 0.0 ? std::log10(m) : floor_log);
  }
  const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    return std::pow(10.0, lo);
  }
  const double width = (hi - lo) / kBins;
  std::array<double, kBins> hist{};
  for (double l : logs) {
    const auto bin = std::min<std::size_t>(kBins - 1, static_cast<std::size_t>((l - lo) / width));
    hist[bin] += 1.0;
  }

  const double total = static_cast<double>(logs.size());
  double total_moment = 0.0;
  for (std::size_t i = 0; i < kBins; ++i) {
    total_moment += static_cast<double>(i) * hist[i];
  }
  double weight_low = 0.0;
  double moment_low = 0.0;
  double best_score = -1.0;
  std::size_t best_first = 0;
  std::size_t best_last = 0;
  for (std::size_t t = 0; t + 1 < kBins; ++t) {
    weight_low += hist[t];
    moment_low += static_cast<double>(t) * hist[t];
    const double weight_high = total - weight_low;
    if (weight_low == 0.0 || weight_high == 0.0) {
      continue;
    }
    const double mean_low = moment_low / weight_low;
    const double mean_high = (total_moment - moment_low) / weight_high;
    const double score = weight_low * weight_high * (mean_low - mean_high) * (mean_low - mean_high);
    if (score > best_score) {
      best_score = score;
      best_first = t;
      best_last = t;
    } else if (score == best_score) {
      best_last = t;
    }
  }
  // Centre of the plateau of equally good cuts; cut sits at the upper edge of
  // the chosen bin.
  const double cut_bin = 0.5 * static_cast<double>(best_first + best_last) + 1.0;
  return std::pow(10.0, lo + cut_bin * width);
}

}  // namespace bdcraft
