#pragma once

#include <array>
#include <string_view>

#include "cd2/features.hpp"

namespace cd2::distances {

using features::kBins;

/// A normalized 16-bin histogram (sums to 1).
using ProbHistogram = std::array<double, kBins>;

inline constexpr double kDefaultKlEpsilon = 1e-6;

/// Throws EmptyHistogram for a histogram without samples.
ProbHistogram normalize(const features::ContrastHistogram& h);

// All functions below take (reference, processed) in that order. Bin indices
// are 0-based: bin 0 is the zero-gradient bin.

/// KL(ref || proc) after adding eps to every bin of both inputs and
/// renormalizing. Natural log.
double kl_divergence(const ProbHistogram& ref, const ProbHistogram& proc, double eps = kDefaultKlEpsilon);

/// Sum of absolute cumulative differences (1-D transport on unit-spaced bins).
double emd(const ProbHistogram& ref, const ProbHistogram& proc);

/// Sum of bin-wise minima; 1 for identical inputs.
double intersection(const ProbHistogram& ref, const ProbHistogram& proc);

/// Largest absolute bin difference.
double total_variation(const ProbHistogram& ref, const ProbHistogram& proc);

/// Mass in the top `tail` bins of ref minus that of proc. Negative values
/// mean the processed image gained strong gradients (noise). Throws BadTail
/// unless 1 <= tail <= 15.
double noise_inc(const ProbHistogram& ref, const ProbHistogram& proc, int tail);

/// ref[0] - proc[0]; negative when the processed image has more flat
/// (zero-gradient) pixels, as with DCT blocking.
double blocking(const ProbHistogram& ref, const ProbHistogram& proc);

/// Shannon entropy in nats, 0 ln 0 := 0.
double entropy(const ProbHistogram& p);

/// H(ref) - H(proc); positive when the processed contrast range shrank.
double entropy_gap(const ProbHistogram& ref, const ProbHistogram& proc);

/// The 16 global distances in their fixed model order.
struct DistanceVector {
  static constexpr std::size_t kSize = 16;
  std::array<double, kSize> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const DistanceVector&) const = default;
};

/// Identifier stamped into trained models; bump when the order changes.
inline constexpr std::string_view kDistanceVectorContract = "cd2-dv16-v1";

const std::array<std::string_view, DistanceVector::kSize>& distance_names();

/// Pools every patch into one global histogram per axis, then evaluates
///   KL, EMD, Intersection, TV, NoiseInc(t=4), NoiseInc(t=6), Blocking,
///   EntropyGap
/// each on gx then gy. The grids may differ; scheme and image size may not.
DistanceVector distance_vector(const features::FeatureSet& ref, const features::FeatureSet& proc,
                               double eps = kDefaultKlEpsilon);

}  // namespace cd2::distances
