#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cd2::imaging {

/// 8-bit sRGB image, row-major RGB triplets.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h);
  RgbImage(int w, int h, std::vector<std::uint8_t> pixels);
};

/// Integer luminance plane, values in [0,255].
struct LuminanceMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  LuminanceMap() = default;
  LuminanceMap(int w, int h, std::uint8_t fill = 0);
  LuminanceMap(int w, int h, std::vector<std::uint8_t> pixels);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::span<const std::uint8_t> row(int y) const {
    return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
  }

  bool operator==(const LuminanceMap&) const = default;
};

/// Absolute Sobel responses; every value lies in [0, kMaxGradient].
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> gx;
  std::vector<std::uint16_t> gy;
};

/// Signed Sobel responses in [-1020, 1020]. Only the dependency analysis
/// needs the sign; the signature itself drops it.
struct SignedGradientField {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> gx;
  std::vector<std::int16_t> gy;
};

inline constexpr int kMaxGradient = 1020;

// sRGB (D65, piecewise gamma) -> CIE L* -> round_half_up(L* * 2.55).
LuminanceMap to_luminance(const RgbImage& img);

/// Single-pixel version of to_luminance.
std::uint8_t luminance_of(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Absolute 3x3 Sobel gradients with edge replication at the borders.
/// Throws DimensionTooSmall when either side is below 3 pixels.
GradientField sobel_gradients(const LuminanceMap& lum);

SignedGradientField sobel_signed(const LuminanceMap& lum);

LuminanceMap transpose(const LuminanceMap& lum);

namespace detail {

// Signed Sobel response for one output row given its vertical neighbours.
// Rows above/below the image are passed as the replicated edge row.
void sobel_row(const std::uint8_t* up, const std::uint8_t* mid, const std::uint8_t* down,
               int width, std::int16_t* gx, std::int16_t* gy);

void check_gradient_dims(int width, int height);

}  // namespace detail

}  // namespace cd2::imaging
