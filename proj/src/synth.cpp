#include "bdcraft/synth.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>

#include "bdcraft/error.hpp"
#include "bdcraft/image_io.hpp"
#include "bdcraft/text_io.hpp"

namespace bdcraft {
namespace fs = std::filesystem;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [lo, hi].
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + engine_() % (hi - lo + 1); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double between(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed ^ (index * 0x9E3779B97F4A7C15ULL);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void fill_rect(Raster& img, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, double value) {
  for (std::size_t y = y0; y < y1 && y < img.height(); ++y) {
    for (std::size_t x = x0; x < x1 && x < img.width(); ++x) {
      img(x, y) = value;
    }
  }
}

// One glyph-like mark: a subset of strokes on a cell, never fewer than two.
void draw_glyph(Raster& img, Rng& rng, std::size_t x, std::size_t y, std::size_t w, std::size_t h, double ink) {
  constexpr std::size_t t = 2;
  unsigned strokes = 0;
  while (__builtin_popcount(strokes) < 2) {
    strokes = static_cast<unsigned>(rng.between(std::size_t{0}, std::size_t{63}));
  }
  if (strokes & 1u) fill_rect(img, x, y, x + t, y + h, ink);
  if (strokes & 2u) fill_rect(img, x + w - t, y, x + w, y + h, ink);
  if (strokes & 4u) fill_rect(img, x, y, x + w, y + t, ink);
  if (strokes & 8u) fill_rect(img, x, y + h / 2 - 1, x + w, y + h / 2 + 1, ink);
  if (strokes & 16u) fill_rect(img, x, y + h - t, x + w, y + h, ink);
  if (strokes & 32u) fill_rect(img, x + w / 2 - 1, y, x + w / 2 + 1, y + h, ink);
}

BlurSpec blur_for(std::size_t index) {
  if (index % 2 == 0) {
    return {};
  }
  switch ((index / 2) % 5) {
    case 0:
      return BlurSpec::box(3, 3);
    case 1:
      return BlurSpec::box(3, 5);
    case 2:
      return BlurSpec::box(5, 3);
    case 3:
      return BlurSpec::gaussian(1.0);
    default:
      return BlurSpec::gaussian(1.5);
  }
}

std::string pseudo_word(Rng& rng, std::size_t letters) {
  std::string w;
  for (std::size_t i = 0; i < letters; ++i) {
    w += static_cast<char>('a' + rng.between(std::size_t{0}, std::size_t{25}));
  }
  return w;
}

}  // namespace

BlurSpec BlurSpec::gaussian(double sigma) {
  if (!(sigma > 0.0)) {
    throw ConfigError("Gaussian sigma must be positive");
  }
  const auto side = 2 * static_cast<std::size_t>(std::ceil(3.0 * sigma)) + 1;
  return {BlurKind::Gaussian, side, side, sigma};
}

Kernel BlurSpec::kernel() const {
  switch (kind) {
    case BlurKind::None:
      return Kernel(1, 1, {1.0});
    case BlurKind::Box:
      return Kernel(cols, rows, std::vector<double>(rows * cols, 1.0 / static_cast<double>(rows * cols)));
    case BlurKind::Gaussian: {
      std::vector<double> w(rows * cols);
      const double cy = static_cast<double>(rows / 2);
      const double cx = static_cast<double>(cols / 2);
      double total = 0.0;
      for (std::size_t v = 0; v < rows; ++v) {
        for (std::size_t u = 0; u < cols; ++u) {
          const double dx = static_cast<double>(u) - cx;
          const double dy = static_cast<double>(v) - cy;
          w[v * cols + u] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          total += w[v * cols + u];
        }
      }
      for (double& x : w) {
        x /= total;
      }
      return Kernel(cols, rows, std::move(w));
    }
  }
  return Kernel(1, 1, {1.0});
}

std::string BlurSpec::label() const {
  switch (kind) {
    case BlurKind::None:
      return "none";
    case BlurKind::Box:
      return "box:" + std::to_string(rows) + "x" + std::to_string(cols);
    case BlurKind::Gaussian: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "gaussian:%.2g", sigma);
      return buf;
    }
  }
  return "none";
}

Raster apply_blur(const Raster& sharp, const BlurSpec& spec) {
  if (spec.kind == BlurKind::None) {
    return sharp;
  }
  return convolve2d(sharp, spec.kernel(), BorderPolicy::Replicate);
}

SyntheticSample render_synthetic_sample(std::size_t index, std::uint64_t seed) {
  Rng rng(mix(seed, index));
  const double background = rng.between(0.80, 0.92);
  const double ink = rng.between(0.08, 0.20);
  Raster sharp(kSynthWidth, kSynthHeight, background);
  ImageAnnotations gt{"img_" + std::to_string(index + 1), {}};

  constexpr std::size_t kMargin = 8;
  const std::size_t lines = rng.between(std::size_t{3}, std::size_t{4});
  const std::size_t band = (kSynthHeight - 2 * kMargin) / lines;
  for (std::size_t line = 0; line < lines; ++line) {
    const std::size_t glyph_h = rng.between(std::size_t{10}, std::min<std::size_t>(band - 6, 18));
    const std::size_t y = kMargin + line * band + rng.between(std::size_t{0}, band - glyph_h - 2);
    std::size_t x = kMargin + rng.between(std::size_t{0}, std::size_t{12});
    for (std::size_t word = 0; word < 4; ++word) {
      const std::size_t glyphs = rng.between(std::size_t{2}, std::size_t{5});
      const std::size_t glyph_w = rng.between(std::size_t{6}, std::size_t{9});
      const std::size_t gap = 2;
      const std::size_t word_w = glyphs * glyph_w + (glyphs - 1) * gap;
      if (x + word_w + kMargin > kSynthWidth) {
        break;
      }
      for (std::size_t g = 0; g < glyphs; ++g) {
        draw_glyph(sharp, rng, x + g * (glyph_w + gap), y, glyph_w, glyph_h, ink);
      }
      AnnotatedBox box;
      box.x_min = static_cast<double>(x);
      box.y_min = static_cast<double>(y);
      box.x_max = static_cast<double>(x + word_w);
      box.y_max = static_cast<double>(y + glyph_h);
      box.transcription = pseudo_word(rng, glyphs);
      gt.boxes.push_back(std::move(box));
      x += word_w + rng.between(std::size_t{8}, std::size_t{14});
    }
  }

  const BlurSpec spec = blur_for(index);
  Raster observed = apply_blur(sharp, spec);
  return SyntheticSample{gt.image_id, std::move(sharp), std::move(observed), std::move(gt), spec};
}

std::string format_gt_icdar2013(const ImageAnnotations& gt) {
  std::string out;
  char buf[128];
  for (const auto& b : gt.boxes) {
    std::snprintf(buf, sizeof buf, "%.17g, %.17g, %.17g, %.17g, ", b.x_min, b.y_min, b.x_max, b.y_max);
    out += buf;
    out += '"';
    out += b.dont_care ? "###" : b.transcription.value_or("");
    out += "\"\n";
  }
  return out;
}

CorpusManifest generate_synthetic_corpus(std::size_t n, std::uint64_t seed, const fs::path& out) {
  if (n == 0) {
    throw ConfigError("corpus size must be at least 1");
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    throw DataError("cannot create corpus directory " + out.string() + ": " + ec.message());
  }
  CorpusManifest manifest{seed, {}};
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const SyntheticSample s = render_synthetic_sample(i, seed);
    CorpusEntry e;
    e.image_id = s.image_id;
    e.image_file = s.image_id + ".png";
    e.gt_file = "gt_" + s.image_id + ".txt";
    e.blurred = s.blur.kind != BlurKind::None;
    e.blur = s.blur.label();
    e.kernel_rows = s.blur.rows;
    e.kernel_cols = s.blur.cols;
    e.boxes = s.ground_truth.boxes.size();
    save_png(s.observed, out / e.image_file);
    write_text_file(out / e.gt_file, format_gt_icdar2013(s.ground_truth));
    entries.push_back({{"image_id", e.image_id},
                       {"image", e.image_file},
                       {"gt", e.gt_file},
                       {"blurred", e.blurred},
                       {"blur", e.blur},
                       {"kernel_rows", e.kernel_rows},
                       {"kernel_cols", e.kernel_cols},
                       {"boxes", e.boxes}});
    manifest.entries.push_back(std::move(e));
  }
  const nlohmann::ordered_json doc{{"seed", seed}, {"count", n}, {"width", kSynthWidth},
                                   {"height", kSynthHeight}, {"images", entries}};
  write_text_file(out / "manifest.json", doc.dump(2) + "\n");
  return manifest;
}

}  // namespace bdcraft
