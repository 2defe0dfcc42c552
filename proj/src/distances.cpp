#include "cd2/distances.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cd2/error.hpp"

namespace cd2::distances {

ProbHistogram normalize(const features::ContrastHistogram& h) {
  if (h.total() == 0) throw Error(ErrorCode::EmptyHistogram, "cannot normalize an empty histogram");
  return h.normalized();
}

double kl_divergence(const ProbHistogram& ref, const ProbHistogram& proc, double eps) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "KL smoothing must be non-negative");
  double rsum = 0.0;
  double qsum = 0.0;
  for (int i = 0; i < kBins; ++i) {
    rsum += ref[i] + eps;
    qsum += proc[i] + eps;
  }
  double kl = 0.0;
  for (int i = 0; i < kBins; ++i) {
    const double r = (ref[i] + eps) / rsum;
    const double q = (proc[i] + eps) / qsum;
    if (r > 0.0) kl += r * std::log(r / q);
  }
  // Rounding can leave a tiny negative value for equal inputs.
  return std::max(kl, 0.0);
}

double emd(const ProbHistogram& ref, const ProbHistogram& proc) {
  double carry = 0.0;
  double total = 0.0;
  for (int i = 0; i < kBins; ++i) {
    total += std::abs(carry);
    carry += ref[i] - proc[i];
  }
  return total;
}

double intersection(const ProbHistogram& ref, const ProbHistogram& proc) {
  double s = 0.0;
  for (int i = 0; i < kBins; ++i) s += std::min(ref[i], proc[i]);
  return s;
}

double total_variation(const ProbHistogram& ref, const ProbHistogram& proc) {
  double m = 0.0;
  for (int i = 0; i < kBins; ++i) m = std::max(m, std::abs(ref[i] - proc[i]));
  return m;
}

double noise_inc(const ProbHistogram& ref, const ProbHistogram& proc, int tail) {
  if (tail < 1 || tail >= kBins) {
    throw Error(ErrorCode::BadTail, "tail size " + std::to_string(tail) + " outside [1,15]");
  }
  double r = 0.0;
  double q = 0.0;
  for (int i = kBins - tail; i < kBins; ++i) {
    r += ref[i];
    q += proc[i];
  }
  return r - q;
}

double blocking(const ProbHistogram& ref, const ProbHistogram& proc) { return ref[0] - proc[0]; }

double entropy(const ProbHistogram& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double entropy_gap(const ProbHistogram& ref, const ProbHistogram& proc) { return entropy(ref) - entropy(proc); }

const std::array<std::string_view, DistanceVector::kSize>& distance_names() {
  static constexpr std::array<std::string_view, DistanceVector::kSize> names = {
      "kl_x",        "kl_y",        "emd_x",      "emd_y",      "intersection_x", "intersection_y",
      "tv_x",        "tv_y",        "noise_inc4_x", "noise_inc4_y", "noise_inc6_x", "noise_inc6_y",
      "blocking_x",  "blocking_y",  "entropy_gap_x", "entropy_gap_y"};
  return names;
}

DistanceVector distance_vector(const features::FeatureSet& ref, const features::FeatureSet& proc, double eps) {
  if (!(ref.scheme == proc.scheme)) throw Error(ErrorCode::SchemeMismatch, "feature sets use different binning");
  if (ref.width != proc.width || ref.height != proc.height) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(ref.width) + "x" + std::to_string(ref.height) + " vs " +
                    std::to_string(proc.width) + "x" + std::to_string(proc.height));
  }
  const ProbHistogram rx = normalize(ref.pooled_x());
  const ProbHistogram ry = normalize(ref.pooled_y());
  const ProbHistogram px = normalize(proc.pooled_x());
  const ProbHistogram py = normalize(proc.pooled_y());

  DistanceVector d;
  auto pair = [&](std::size_t at, auto&& fn) {
    d[at] = fn(rx, px);
    d[at + 1] = fn(ry, py);
  };
  pair(0, [&](const auto& r, const auto& q) { return kl_divergence(r, q, eps); });
  pair(2, [](const auto& r, const auto& q) { return emd(r, q); });
  pair(4, [](const auto& r, const auto& q) { return intersection(r, q); });
  pair(6, [](const auto& r, const auto& q) { return total_variation(r, q); });
  pair(8, [](const auto& r, const auto& q) { return noise_inc(r, q, 4); });
  pair(10, [](const auto& r, const auto& q) { return noise_inc(r, q, 6); });
  pair(12, [](const auto& r, const auto& q) { return blocking(r, q); });
  pair(14, [](const auto& r, const auto& q) { return entropy_gap(r, q); });
  return d;
}

}  // namespace cd2::distances
