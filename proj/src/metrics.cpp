#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cd2/evaluation.hpp"

namespace cd2::evaluation {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " values");
  }
  if (a.empty()) throw Error(ErrorCode::EmptyDataset, "no samples");
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double plcc(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  const double mp = mean(pred);
  const double mt = mean(truth);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i] - mp;
    const double dy = truth[i] - mt;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "correlation undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their mean.
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double srocc(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  return plcc(rp, rt);
}

AffineFit fit_affine(std::span<const double> x, std::span<const double> truth) {
  check_lengths(x, truth);
  const double mx = mean(x);
  const double mt = mean(truth);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (truth[i] - mt);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  AffineFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = mt - fit.slope * mx;
  return fit;
}

double psnr(const imaging::LuminanceMap& ref, const imaging::LuminanceMap& proc) {
  if (ref.width != proc.width || ref.height != proc.height) {
    throw Error(ErrorCode::DimensionMismatch, "PSNR needs equally sized images");
  }
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const int d = int{ref.data[i]} - int{proc.data[i]};
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return std::numeric_limits<double>::infinity();
  const double mse = static_cast<double>(sse) / static_cast<double>(ref.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace cd2::evaluation
