#include <gtest/gtest.h>

#include <random>

#include "cd2/error.hpp"
#include "cd2/imaging.hpp"
#include "oracles.hpp"
#include "synth.hpp"

namespace cd2 {
namespace {

using imaging::LuminanceMap;
using imaging::RgbImage;

TEST(ToLuminance, BlackAndWhite) {
  RgbImage img(2, 1, {0, 0, 0, 255, 255, 255});
  const auto lum = imaging::to_luminance(img);
  EXPECT_EQ(lum.data[0], 0);
  EXPECT_EQ(lum.data[1], 255);
}

TEST(ToLuminance, MidGrayMatchesScalarOracle) {
  // Oracle: L*(119 gray) = 50.0344 -> 127.588 -> 128.
  const int expected = oracle::luminance_code(119, 119, 119);
  ASSERT_EQ(expected, 128);
  RgbImage img(1, 1, {119, 119, 119});
  EXPECT_EQ(imaging::to_luminance(img).data[0], expected);
}

TEST(ToLuminance, MatchesOracleOnGrayRampAndColours) {
  for (int v = 0; v < 256; ++v) {
    const auto c = static_cast<std::uint8_t>(v);
    EXPECT_EQ(imaging::luminance_of(c, c, c), oracle::luminance_code(v, v, v)) << "gray " << v;
  }
  std::mt19937 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const int r = rng() & 0xff, g = rng() & 0xff, b = rng() & 0xff;
    EXPECT_EQ(imaging::luminance_of(r, g, b), oracle::luminance_code(r, g, b));
  }
}

TEST(ToLuminance, RejectsBadBuffer) {
  EXPECT_THROW(RgbImage(2, 2, std::vector<std::uint8_t>(11)), Error);
}

TEST(Sobel, ConstantImageIsZero) {
  const auto g = imaging::sobel_gradients(LuminanceMap(9, 7, 128));
  for (auto v : g.gx) EXPECT_EQ(v, 0);
  for (auto v : g.gy) EXPECT_EQ(v, 0);
}

TEST(Sobel, VerticalStepReachesDomainMaximum) {
  LuminanceMap img(8, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 4; x < 8; ++x) img.at(x, y) = 255;
  const auto g = imaging::sobel_gradients(img);
  for (int y = 0; y < 6; ++y) {
    // Both columns adjacent to the step see 4 * 255.
    EXPECT_EQ(g.gx[y * 8 + 3], 1020);
    EXPECT_EQ(g.gx[y * 8 + 4], 1020);
    EXPECT_EQ(g.gx[y * 8 + 0], 0);
    for (int x = 0; x < 8; ++x) EXPECT_EQ(g.gy[y * 8 + x], 0);
  }
}

TEST(Sobel, MatchesNaiveConvolution) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int w = 3 + static_cast<int>(seed % 5), h = 3 + static_cast<int>((seed * 7) % 6);
    const auto img = synth::random_image(w, h, seed);
    const auto g = imaging::sobel_gradients(img);
    const auto ref = oracle::naive_sobel(img.data, w, h);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      ASSERT_EQ(g.gx[i], std::abs(ref.gx[i]));
      ASSERT_EQ(g.gy[i], std::abs(ref.gy[i]));
    }
  }
}

TEST(Sobel, FiveByFiveRandom) {
  const auto img = synth::random_image(5, 5, 12345);
  const auto s = imaging::sobel_signed(img);
  const auto ref = oracle::naive_sobel(img.data, 5, 5);
  for (std::size_t i = 0; i < 25; ++i) {
    EXPECT_EQ(s.gx[i], ref.gx[i]);
    EXPECT_EQ(s.gy[i], ref.gy[i]);
  }
}

TEST(Sobel, TooSmall) {
  try {
    imaging::sobel_gradients(LuminanceMap(2, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooSmall);
  }
  EXPECT_THROW(imaging::sobel_gradients(LuminanceMap(5, 2)), Error);
}

// Properties over seeded random images.
TEST(SobelProperties, InversionSymmetryRangeAndTranspose) {
  std::mt19937 rng(99);
  for (int t = 0; t < 50; ++t) {
    const int w = 3 + rng() % 40, h = 3 + rng() % 40;
    const auto img = synth::random_image(w, h, rng());
    LuminanceMap inv = img;
    for (auto& v : inv.data) v = static_cast<std::uint8_t>(255 - v);
    const auto g = imaging::sobel_gradients(img);
    const auto gi = imaging::sobel_gradients(inv);
    EXPECT_EQ(g.gx, gi.gx);
    EXPECT_EQ(g.gy, gi.gy);
    for (auto v : g.gx) ASSERT_LE(v, imaging::kMaxGradient);
    for (auto v : g.gy) ASSERT_LE(v, imaging::kMaxGradient);

    const auto gt = imaging::sobel_gradients(imaging::transpose(img));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) ASSERT_EQ(gt.gx[x * h + y], g.gy[y * w + x]);
  }
}

}  // namespace
}  // namespace cd2
