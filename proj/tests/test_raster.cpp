#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bdcraft/error.hpp"
#include "bdcraft/raster.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bdcraft;

namespace {

constexpr BorderPolicy kAllBorders[] = {BorderPolicy::Replicate, BorderPolicy::Reflect, BorderPolicy::ZeroPad};

Kernel random_kernel(std::size_t cols, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> w(cols * rows);
  for (auto& v : w) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  return Kernel(cols, rows, std::move(w));
}

double max_abs_diff(const Raster& a, const Raster& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
  return m;
}

}  // namespace

TEST_CASE("raster rejects malformed construction") {
  CHECK_THROWS_AS(Raster(0, 3), InvalidInput);
  CHECK_THROWS_AS(Raster(2, 2, std::vector<double>{1.0, 2.0, 3.0}), InvalidInput);
  CHECK_THROWS_AS(Raster(2, 1, std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
  CHECK_THROWS_AS(Raster(1, 1, std::vector<double>{std::numeric_limits<double>::infinity()}), InvalidInput);
  CHECK_THROWS_AS(Kernel(2, 2, {1.0}), InvalidInput);
}

TEST_CASE("to_grayscale uses BT.601 weights") {
  SUBCASE("equal channels are preserved") {
    const Raster c(4, 3, 0.5);
    const Raster g = to_grayscale(c, c, c);
    for (double v : g.samples()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("pure red reads the red weight") {
    const Raster g = to_grayscale(Raster(3, 2, 1.0), Raster(3, 2, 0.0), Raster(3, 2, 0.0));
    for (double v : g.samples()) CHECK(v == 0.299);
  }
  SUBCASE("two-pixel hand evaluation") {
    const Raster g = to_grayscale(Raster(2, 1, {1.0, 0.0}), Raster(2, 1, {0.0, 1.0}), Raster(2, 1, {0.0, 0.0}));
    CHECK(g(0, 0) == 0.299);
    CHECK(g(1, 0) == 0.587);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(to_grayscale(Raster(2, 2), Raster(2, 2), Raster(2, 3)), InvalidInput);
  }
}

TEST_CASE("convolve2d basic cases") {
  const Raster img = fixture::random_raster(9, 7, 11);

  SUBCASE("1x1 identity kernel") {
    for (auto border : kAllBorders) CHECK(convolve2d(img, Kernel(1, 1, {1.0}), border) == img);
  }
  SUBCASE("constant image under replicate scales by the kernel sum") {
    const Raster c(6, 5, 0.25);
    const Kernel k = random_kernel(5, 3, 3);
    const Raster out = convolve2d(c, k, BorderPolicy::Replicate);
    for (double v : out.samples()) CHECK(v == doctest::Approx(0.25 * k.sum()).epsilon(1e-12));
  }
  SUBCASE("delta through a box kernel with zero padding") {
    Raster delta(3, 3, 0.0);
    delta(1, 1) = 1.0;
    const Raster out = convolve2d(delta, Kernel(3, 3, std::vector<double>(9, 1.0)), BorderPolicy::ZeroPad);
    const Raster expected = oracle::convolve(delta, Kernel(3, 3, std::vector<double>(9, 1.0)), BorderPolicy::ZeroPad);
    CHECK(out == expected);
    for (double v : out.samples()) CHECK(v == 1.0);
  }
  SUBCASE("oversized kernel under reflect is rejected") {
    const Raster small(2, 2, 0.5);
    CHECK_THROWS_AS(convolve2d(small, Kernel(5, 1, std::vector<double>(5, 0.2)), BorderPolicy::Reflect),
                    InvalidInput);
    CHECK_NOTHROW(convolve2d(small, Kernel(4, 1, std::vector<double>(4, 0.25)), BorderPolicy::Reflect));
  }
}

TEST_CASE("correlate2d basic cases") {
  SUBCASE("symmetric kernel matches convolution") {
    const Raster img = fixture::random_raster(8, 8, 5);
    const Kernel k(3, 3, {1, 2, 1, 2, 4, 2, 1, 2, 1});
    for (auto border : kAllBorders) CHECK(correlate2d(img, k, border) == convolve2d(img, k, border));
  }
  SUBCASE("flip relation for a two-tap kernel") {
    const Raster img = fixture::random_raster(7, 3, 6);
    for (auto border : kAllBorders) {
      CHECK(correlate2d(img, Kernel(2, 1, {1.0, 0.0}), border) == convolve2d(img, Kernel(2, 1, {0.0, 1.0}), border));
    }
  }
  SUBCASE("forward difference on a three-pixel row") {
    const Raster img(3, 1, {1.0, 2.0, 3.0});
    const Kernel k(2, 1, {1.0, -1.0});
    const Raster out = correlate2d(img, k, BorderPolicy::Replicate);
    const Raster expected = oracle::correlate(img, k, BorderPolicy::Replicate);
    CHECK(out == expected);
    CHECK(out == Raster(3, 1, {-1.0, -1.0, 0.0}));
  }
}

TEST_CASE("convolution and correlation agree with the sliding-window oracle") {
  std::uint64_t seed = 100;
  for (std::size_t kw = 1; kw <= 7; ++kw) {
    for (std::size_t kh = 1; kh <= 7; kh += 2) {
      const Raster img = fixture::random_raster(11 + kw, 6 + kh, ++seed);
      const Kernel k = random_kernel(kw, kh, ++seed);
      for (auto border : kAllBorders) {
        CAPTURE(kw);
        CAPTURE(kh);
        CHECK(max_abs_diff(convolve2d(img, k, border), oracle::convolve(img, k, border)) < 1e-12);
        CHECK(max_abs_diff(correlate2d(img, k, border), oracle::correlate(img, k, border)) < 1e-12);
      }
    }
  }
}

TEST_CASE("convolution properties") {
  std::uint64_t seed = 500;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t w = 5 + trial % 9;
    const std::size_t h = 4 + trial % 6;
    const std::size_t kw = 1 + trial % 7;
    const std::size_t kh = 1 + (trial / 3) % 5;
    const Raster a = fixture::random_raster(w, h, ++seed);
    const Raster b = fixture::random_raster(w, h, ++seed);
    const Kernel k = random_kernel(kw, kh, ++seed);
    for (auto border : kAllBorders) {
      if (border == BorderPolicy::Reflect && (kw > 2 * w || kh > 2 * h)) continue;
      const Raster ca = convolve2d(a, k, border);
      CHECK(ca.width() == w);
      CHECK(ca.height() == h);

      // flip relation is exact by construction
      CHECK(convolve2d(a, k.flipped(), border) == correlate2d(a, k, border));

      // linearity
      const double alpha = 0.7, beta = -1.3;
      Raster mix = a;
      for (std::size_t i = 0; i < mix.size(); ++i) mix.samples()[i] = alpha * a.samples()[i] + beta * b.samples()[i];
      const Raster lhs = convolve2d(mix, k, border);
      const Raster cb = convolve2d(b, k, border);
      for (std::size_t i = 0; i < lhs.size(); ++i) {
        const double rhs = alpha * ca.samples()[i] + beta * cb.samples()[i];
        CHECK(std::abs(lhs.samples()[i] - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
      }
    }
    // interior pixels never read the border
    const Raster rep = convolve2d(a, k, BorderPolicy::Replicate);
    const Raster zer = convolve2d(a, k, BorderPolicy::ZeroPad);
    const Raster ref = convolve2d(a, k, BorderPolicy::Reflect);
    for (std::size_t y = kh; y + kh < h; ++y) {
      for (std::size_t x = kw; x + kw < w; ++x) {
        CHECK(rep(x, y) == zer(x, y));
        CHECK(rep(x, y) == ref(x, y));
      }
    }
  }
}

TEST_CASE("pad and flips") {
  const Raster img(3, 1, {1.0, 2.0, 3.0});
  CHECK(pad(img, 2, 0, 2, 0, BorderPolicy::Replicate) == Raster(7, 1, {1, 1, 1, 2, 3, 3, 3}));
  CHECK(pad(img, 2, 0, 2, 0, BorderPolicy::Reflect) == Raster(7, 1, {2, 1, 1, 2, 3, 3, 2}));
  CHECK(pad(img, 2, 0, 2, 0, BorderPolicy::ZeroPad) == Raster(7, 1, {0, 0, 1, 2, 3, 0, 0}));
  CHECK(flip_horizontal(img) == Raster(3, 1, {3.0, 2.0, 1.0}));
  const Raster col(1, 3, {1.0, 2.0, 3.0});
  CHECK(flip_vertical(col) == Raster(1, 3, {3.0, 2.0, 1.0}));
  CHECK(parse_border_policy("reflect") == BorderPolicy::Reflect);
  CHECK_THROWS_AS(parse_border_policy("wrap"), ConfigError);
}
