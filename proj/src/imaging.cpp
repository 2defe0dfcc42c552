#include "cd2/imaging.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <string>

#include "cd2/error.hpp"

namespace cd2::imaging {

namespace {

void check_plane(int w, int h, std::size_t size, std::size_t channels) {
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::InvalidImage,
                "image dimensions must be positive, got " + std::to_string(w) + "x" + std::to_string(h));
  }
  if (size != static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels) {
    throw Error(ErrorCode::InvalidImage, "pixel buffer size does not match dimensions");
  }
}

// sRGB transfer function inverted, one entry per 8-bit code value.
const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

}  // namespace

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  check_plane(w, h, static_cast<std::size_t>(w) * h * 3, 3);
  data.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

RgbImage::RgbImage(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), data(std::move(pixels)) {
  check_plane(w, h, data.size(), 3);
}

LuminanceMap::LuminanceMap(int w, int h, std::uint8_t fill) : width(w), height(h) {
  check_plane(w, h, static_cast<std::size_t>(w) * h, 1);
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

LuminanceMap::LuminanceMap(int w, int h, std::vector<std::uint8_t> pixels)
    : width(w), height(h), data(std::move(pixels)) {
  check_plane(w, h, data.size(), 1);
}

std::uint8_t luminance_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto& lin = linear_table();
  // Y row of the sRGB -> XYZ (D65) matrix; Yn = 1.
  const double y = 0.2126729 * lin[r] + 0.7151522 * lin[g] + 0.0721750 * lin[b];
  constexpr double kEpsilon = 216.0 / 24389.0;
  constexpr double kKappa = 24389.0 / 27.0;
  const double f = y > kEpsilon ? std::cbrt(y) : (kKappa * y + 16.0) / 116.0;
  const double lstar = 116.0 * f - 16.0;
  const double scaled = std::floor(lstar * 2.55 + 0.5);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

LuminanceMap to_luminance(const RgbImage& img) {
  check_plane(img.width, img.height, img.data.size(), 3);
  LuminanceMap out(img.width, img.height);
  const std::size_t n = out.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.data[i] = luminance_of(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
  }
  return out;
}

namespace detail {

void check_gradient_dims(int width, int height) {
  if (width < 3 || height < 3) {
    throw Error(ErrorCode::DimensionTooSmall, "Sobel gradients need at least 3x3 pixels, got " +
                                                  std::to_string(width) + "x" + std::to_string(height));
  }
}

void sobel_row(const std::uint8_t* up, const std::uint8_t* mid, const std::uint8_t* down,
               int width, std::int16_t* gx, std::int16_t* gy) {
  auto column = [&](int x, int xl, int xr) {
    const int l = up[xl] + 2 * mid[xl] + down[xl];
    const int r = up[xr] + 2 * mid[xr] + down[xr];
    const int t = up[xl] + 2 * up[x] + up[xr];
    const int b = down[xl] + 2 * down[x] + down[xr];
    gx[x] = static_cast<std::int16_t>(r - l);
    gy[x] = static_cast<std::int16_t>(b - t);
  };
  column(0, 0, 1);
  for (int x = 1; x < width - 1; ++x) column(x, x - 1, x + 1);
  column(width - 1, width - 2, width - 1);
}

}  // namespace detail

SignedGradientField sobel_signed(const LuminanceMap& lum) {
  detail::check_gradient_dims(lum.width, lum.height);
  SignedGradientField out;
  out.width = lum.width;
  out.height = lum.height;
  out.gx.resize(lum.data.size());
  out.gy.resize(lum.data.size());
  const int w = lum.width;
  for (int y = 0; y < lum.height; ++y) {
    const std::uint8_t* up = lum.row(y == 0 ? 0 : y - 1).data();
    const std::uint8_t* mid = lum.row(y).data();
    const std::uint8_t* down = lum.row(y == lum.height - 1 ? y : y + 1).data();
    const std::size_t off = static_cast<std::size_t>(y) * w;
    detail::sobel_row(up, mid, down, w, out.gx.data() + off, out.gy.data() + off);
  }
  return out;
}

GradientField sobel_gradients(const LuminanceMap& lum) {
  SignedGradientField s = sobel_signed(lum);
  GradientField out;
  out.width = s.width;
  out.height = s.height;
  out.gx.resize(s.gx.size());
  out.gy.resize(s.gy.size());
  for (std::size_t i = 0; i < s.gx.size(); ++i) {
    out.gx[i] = static_cast<std::uint16_t>(std::abs(s.gx[i]));
    out.gy[i] = static_cast<std::uint16_t>(std::abs(s.gy[i]));
  }
  return out;
}

LuminanceMap transpose(const LuminanceMap& lum) {
  LuminanceMap out(lum.height, lum.width);
  for (int y = 0; y < lum.height; ++y) {
    for (int x = 0; x < lum.width; ++x) out.at(y, x) = lum.at(x, y);
  }
  return out;
}

}  // namespace cd2::imaging
