#include "bdcraft/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "bdcraft/error.hpp"

namespace bdcraft {

Raster load_grayscale(const std::filesystem::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw DataError("cannot decode image " + path.string());
  }
  CV_Assert(bgr.type() == CV_8UC3);
  const auto w = static_cast<std::size_t>(bgr.cols);
  const auto h = static_cast<std::size_t>(bgr.rows);
  std::vector<double> r(w * h), g(w * h), b(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* px = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      b[y * w + x] = px[x][0] / 255.0;
      g[y * w + x] = px[x][1] / 255.0;
      r[y * w + x] = px[x][2] / 255.0;
    }
  }
  return to_grayscale(Raster(w, h, std::move(r)), Raster(w, h, std::move(g)), Raster(w, h, std::move(b)));
}

std::vector<std::uint8_t> to_gray8(const Raster& img) {
  std::vector<std::uint8_t> out(img.size());
  const auto s = img.samples();
  std::transform(s.begin(), s.end(), out.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  return out;
}

void save_png(const Raster& img, const std::filesystem::path& path) {
  auto bytes = to_gray8(img);
  const cv::Mat mat(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC1, bytes.data());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw DataError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) {
    throw DataError("cannot write " + path.string());
  }
}

bool is_supported_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace bdcraft
