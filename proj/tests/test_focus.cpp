#include <doctest.h>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdcraft/error.hpp"
#include "bdcraft/focus.hpp"
#include "bdcraft/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bdcraft;

namespace {

double opencv_measure(const Raster& img, int center) {
  cv::Mat src(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_64F);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      src.at<double>(static_cast<int>(y), static_cast<int>(x)) = img(x, y) * 255.0;
    }
  }
  cv::Mat dst;
  if (center == -4) {
    cv::Laplacian(src, dst, CV_64F, 1, 1.0, 0.0, cv::BORDER_REPLICATE);
  } else {
    const cv::Mat k = (cv::Mat_<double>(3, 3) << 1, 1, 1, 1, -8, 1, 1, 1, 1);
    cv::filter2D(src, dst, CV_64F, k, cv::Point(-1, -1), 0.0, cv::BORDER_REPLICATE);
  }
  std::vector<double> values(dst.begin<double>(), dst.end<double>());
  return oracle::variance(values);
}

}  // namespace

TEST_CASE("laplacian response") {
  SUBCASE("constant image") {
    const Raster r = laplacian_response(Raster(7, 5, 0.42));
    for (double v : r.samples()) CHECK(v == 0.0);
  }
  SUBCASE("linear ramp interior") {
    Raster ramp(8, 6);
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 8; ++x) ramp(x, y) = 0.01 * static_cast<double>(x) + 0.02 * static_cast<double>(y);
    const Raster r = laplacian_response(ramp);
    for (std::size_t y = 1; y + 1 < 6; ++y)
      for (std::size_t x = 1; x + 1 < 8; ++x) CHECK(std::abs(r(x, y)) < 1e-15);
  }
  SUBCASE("centre impulse against the sliding-window oracle") {
    Raster delta(3, 3, 0.0);
    delta(1, 1) = 1.0;
    const Raster r = laplacian_response(delta);
    CHECK(r(1, 1) == -4.0);
    const Raster expected = oracle::convolve(delta, Kernel(3, 3, {0, 1, 0, 1, -4, 1, 0, 1, 0}), BorderPolicy::Replicate);
    CHECK(r == expected);
    const Raster r8 = laplacian_response(delta, LaplacianKind::EightNeighbor);
    CHECK(r8 == oracle::convolve(delta, Kernel(3, 3, {1, 1, 1, 1, -8, 1, 1, 1, 1}), BorderPolicy::Replicate));
  }
}

TEST_CASE("focus measure") {
  SUBCASE("constant image is exactly zero") {
    CHECK(focus_measure(Raster(20, 10, 0.3)) == 0.0);
    CHECK(focus_measure(Raster(20, 10, 0.3), LaplacianKind::EightNeighbor) == 0.0);
  }
  SUBCASE("two-pixel fixture with response (-1, 1)") {
    CHECK(focus_measure(Raster(2, 1, {0.0, 1.0 / 255.0})) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single pixel is rejected") {
    CHECK_THROWS_AS(focus_measure(Raster(1, 1, 0.5)), InvalidInput);
  }
  SUBCASE("agrees with an OpenCV Laplacian and a two-pass variance") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Raster img = fixture::random_raster(13 + seed, 9 + seed % 5, seed);
      const double ours = focus_measure(img);
      const double ref = opencv_measure(img, -4);
      CHECK(std::abs(ours - ref) <= 1e-9 * std::max(1.0, ref));
      const double ours8 = focus_measure(img, LaplacianKind::EightNeighbor);
      const double ref8 = opencv_measure(img, -8);
      CHECK(std::abs(ours8 - ref8) <= 1e-9 * std::max(1.0, ref8));
    }
  }
  SUBCASE("flip invariance is bitwise") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Raster img = fixture::random_raster(31, 17, 100 + seed);
      const double m = focus_measure(img);
      CHECK(focus_measure(flip_horizontal(img)) == m);
      CHECK(focus_measure(flip_vertical(img)) == m);
      CHECK(focus_measure(flip_vertical(flip_horizontal(img))) == m);
    }
  }
}

TEST_CASE("classification boundary") {
  CHECK(classify_measure(7.97, 100.0).label == FocusLabel::Blurry);
  CHECK(classify_measure(693.66, 100.0).label == FocusLabel::NonBlurry);
  CHECK(classify_measure(100.0, 100.0).label == FocusLabel::Blurry);
  CHECK(classify_measure(std::nextafter(100.0, 200.0), 100.0).label == FocusLabel::NonBlurry);
  CHECK_THROWS_AS(classify_measure(5.0, 0.0), ConfigError);
  CHECK_THROWS_AS(classify_measure(5.0, -1.0), ConfigError);
  const FocusVerdict v = classify(Raster(4, 4, 0.5), 42.0);
  CHECK(v.measure == 0.0);
  CHECK(v.threshold == 42.0);
  CHECK(v.label == FocusLabel::Blurry);
  CHECK(to_string(FocusLabel::NonBlurry) == "non-blurry");
}

TEST_CASE("raising the threshold never turns blurry into non-blurry") {
  const double measures[] = {0.0, 3.5, 99.9, 100.0, 250.0, 7000.0};
  for (double m : measures) {
    double prev = 1.0;
    bool was_blurry = false;
    for (double t = 1.0; t < 1e5; t *= 1.7) {
      const bool blurry = classify_measure(m, t).label == FocusLabel::Blurry;
      if (was_blurry) CHECK(blurry);
      was_blurry = blurry;
      prev = t;
    }
    CHECK(prev > 1.0);
  }
}

TEST_CASE("Gaussian blur lowers the focus measure on synthetic text") {
  std::size_t checked = 0;
  for (std::size_t i = 0; checked < 60; ++i) {
    const SyntheticSample s = render_synthetic_sample(2 * i, 7);
    const double sharp = focus_measure(s.sharp);
    for (double sigma : {1.0, 1.5, 2.5}) {
      CHECK(focus_measure(apply_blur(s.sharp, BlurSpec::gaussian(sigma))) < sharp);
    }
    ++checked;
  }
}

TEST_CASE("threshold calibration") {
  SUBCASE("separates two well-separated clusters") {
    std::vector<double> m;
    for (int i = 0; i < 20; ++i) m.push_back(5.0 + i);
    for (int i = 0; i < 20; ++i) m.push_back(500.0 + 10.0 * i);
    const double t = calibrate_threshold(m);
    CHECK(t > 24.0);
    CHECK(t < 500.0);
  }
  SUBCASE("needs at least two values") {
    const std::vector<double> one{3.0};
    CHECK_THROWS_AS(calibrate_threshold(one), InvalidInput);
  }
}
