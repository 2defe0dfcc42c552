#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "cd2/evaluation.hpp"

namespace cd2::evaluation {

namespace {

constexpr int kRange = 2 * imaging::kMaxGradient + 1;

// Average ranks for integer samples in [-1020,1020] via counting.
std::vector<double> integer_ranks(const std::vector<int>& v) {
  std::vector<std::uint64_t> count(kRange, 0);
  for (int x : v) ++count[static_cast<std::size_t>(x + imaging::kMaxGradient)];
  std::vector<double> rank_of(kRange, 0.0);
  std::uint64_t before = 0;
  for (int i = 0; i < kRange; ++i) {
    if (count[i]) rank_of[i] = static_cast<double>(before) + (static_cast<double>(count[i]) + 1.0) / 2.0;
    before += count[i];
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = rank_of[static_cast<std::size_t>(v[i] + imaging::kMaxGradient)];
  return out;
}

double pearson_or_nan(std::span<const double> a, std::span<const double> b) {
  try {
    return plcc(a, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateVariance) return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

Spread spread_of(std::vector<double> v) {
  Spread s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  if (n > 1) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

}  // namespace

double information_quality_ratio(std::span<const std::uint16_t> gx, std::span<const std::uint16_t> gy,
                                 const features::BinningScheme& scheme) {
  if (gx.size() != gy.size()) throw Error(ErrorCode::LengthMismatch, "gradient streams differ in length");
  if (gx.empty()) throw Error(ErrorCode::EmptyDataset, "no gradient samples");
  constexpr int B = features::kBins;
  std::array<std::uint64_t, B * B> joint{};
  for (std::size_t i = 0; i < gx.size(); ++i) {
    ++joint[static_cast<std::size_t>(scheme.bin_index(gx[i]) * B + scheme.bin_index(gy[i]))];
  }
  const double n = static_cast<double>(gx.size());
  std::array<double, B> px{};
  std::array<double, B> py{};
  double hxy = 0.0;
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < B; ++j) {
      const double p = static_cast<double>(joint[static_cast<std::size_t>(i * B + j)]) / n;
      px[i] += p;
      py[j] += p;
      if (p > 0.0) hxy -= p * std::log(p);
    }
  }
  if (!(hxy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double mi = distances::entropy(px) + distances::entropy(py) - hxy;
  return std::clamp(mi / hxy, 0.0, 1.0);
}

DependencyStats gradient_dependency(const imaging::LuminanceMap& lum) {
  const auto g = imaging::sobel_signed(lum);
  std::vector<int> sx;
  std::vector<int> sy;
  const auto interior = static_cast<std::size_t>(lum.width - 2) * static_cast<std::size_t>(lum.height - 2);
  sx.reserve(interior);
  sy.reserve(interior);
  for (int y = 1; y + 1 < lum.height; ++y) {
    for (int x = 1; x + 1 < lum.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * lum.width + x;
      sx.push_back(g.gx[i]);
      sy.push_back(g.gy[i]);
    }
  }
  std::vector<double> dx(sx.begin(), sx.end());
  std::vector<double> dy(sy.begin(), sy.end());
  std::vector<std::uint16_t> ax(sx.size());
  std::vector<std::uint16_t> ay(sy.size());
  for (std::size_t i = 0; i < sx.size(); ++i) {
    ax[i] = static_cast<std::uint16_t>(std::abs(sx[i]));
    ay[i] = static_cast<std::uint16_t>(std::abs(sy[i]));
  }
  DependencyStats s;
  s.pearson = pearson_or_nan(dx, dy);
  s.spearman = pearson_or_nan(integer_ranks(sx), integer_ranks(sy));
  s.iqr = information_quality_ratio(ax, ay);
  return s;
}

CorrelationReport gradient_dependency_analysis(std::span<const imaging::LuminanceMap> images) {
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "no images to analyze");
  CorrelationReport report;
  std::vector<double> p;
  std::vector<double> s;
  std::vector<double> q;
  for (const auto& img : images) {
    const auto st = gradient_dependency(img);
    report.per_image.push_back(st);
    if (std::isnan(st.pearson) || std::isnan(st.spearman) || std::isnan(st.iqr)) {
      ++report.skipped;
      continue;
    }
    p.push_back(st.pearson);
    s.push_back(st.spearman);
    q.push_back(st.iqr);
  }
  report.pearson = spread_of(p);
  report.spearman = spread_of(s);
  report.iqr = spread_of(q);
  return report;
}

}  // namespace cd2::evaluation
