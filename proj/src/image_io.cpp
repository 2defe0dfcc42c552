#include "cd2/image_io.hpp"

#include <filesystem>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "cd2/error.hpp"

namespace cd2::io {

imaging::LuminanceMap load_luminance(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::IoError, "cannot read " + path);
  cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (img.empty()) throw Error(ErrorCode::IoError, "cannot decode " + path);
  if (img.depth() == CV_16U) img.convertTo(img, CV_8U, 1.0 / 256.0);
  if (img.depth() != CV_8U) throw Error(ErrorCode::IoError, "unsupported sample type in " + path);

  const int w = img.cols;
  const int h = img.rows;
  if (img.channels() == 1) {
    imaging::LuminanceMap lum(w, h);
    for (int y = 0; y < h; ++y) {
      const auto* src = img.ptr<std::uint8_t>(y);
      std::copy(src, src + w, lum.data.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
    return lum;
  }
  if (img.channels() != 3 && img.channels() != 4) {
    throw Error(ErrorCode::IoError, "unsupported channel count in " + path);
  }
  const int step = img.channels();
  imaging::RgbImage rgb(w, h);
  for (int y = 0; y < h; ++y) {
    const auto* src = img.ptr<std::uint8_t>(y);
    auto* dst = rgb.data.data() + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w; ++x) {
      // OpenCV stores BGR(A).
      dst[3 * x] = src[step * x + 2];
      dst[3 * x + 1] = src[step * x + 1];
      dst[3 * x + 2] = src[step * x];
    }
  }
  return imaging::to_luminance(rgb);
}

void write_gray(const scoring::GrayImage& img, const std::string& path) {
  if (std::filesystem::path(path).extension() == ".pgm") {
    scoring::write_pgm(img, path);
    return;
  }
  cv::Mat m(img.height, img.width, CV_8UC1, const_cast<std::uint8_t*>(img.data.data()));
  bool ok = false;
  try {
    ok = cv::imwrite(path, m);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::IoError, "cannot write " + path + ": " + e.what());
  }
  if (!ok) throw Error(ErrorCode::IoError, "cannot write " + path);
}

}  // namespace cd2::io
