#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cd2/distances.hpp"
#include "cd2/features.hpp"

namespace cd2::scoring {

/// Per-patch KL(gx) + KL(gy), row-major M x N.
struct DistortionMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(int a, int b) const { return values[static_cast<std::size_t>(a) * cols + b]; }
};

enum class Aggregation { SumAbs, SumSquares };

struct Cd2aScore {
  double value = 0.0;
  Aggregation aggregation = Aggregation::SumAbs;
};

enum class Safety { Safe, Unsafe };

/// Throws GridMismatch when grids or image sizes differ, SchemeMismatch when
/// the binning differs.
DistortionMap distortion_map(const features::FeatureSet& ref, const features::FeatureSet& proc,
                             double eps = distances::kDefaultKlEpsilon);

Cd2aScore cd2a_score(const DistortionMap& map, Aggregation aggregation = Aggregation::SumAbs);

/// Per-operation thresholds tau > 0, keyed by operation label.
class ThresholdTable {
 public:
  /// Parses "operation=tau" lines. Blank lines and '#' comments are
  /// ignored. Throws ConfigError on malformed lines or tau <= 0.
  static ThresholdTable parse(std::istream& in);
  static ThresholdTable load(const std::string& path);

  void set(const std::string& operation, double tau);
  /// Throws UnknownOperation.
  double tau(const std::string& operation) const;
  bool contains(const std::string& operation) const { return taus_.count(operation) != 0; }
  const std::map<std::string, double>& entries() const { return taus_; }

 private:
  std::map<std::string, double> taus_;
};

/// Unsafe iff score >= tau.
Safety classify(const Cd2aScore& score, double tau);
Safety classify(const Cd2aScore& score, const std::string& operation, const ThresholdTable& table);

std::string_view to_string(Safety s);
std::string_view to_string(Aggregation a);
/// Accepts "abs"/"sum-abs" and "sq"/"sum-squares"; throws ConfigError.
Aggregation parse_aggregation(std::string_view text);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

/// Linear map of entries onto [0,255] (max entry -> 255, zero -> 0). With
/// `upscale_to`, cells are expanded nearest-neighbour to that image size
/// along the same patch boundaries the extractor uses.
GrayImage render_heatmap(const DistortionMap& map, std::optional<features::PatchGrid> upscale_to = std::nullopt);

/// Binary PGM (P5). Throws IoError when the stream fails.
void write_pgm(const GrayImage& img, std::ostream& out);
void write_pgm(const GrayImage& img, const std::string& path);

}  // namespace cd2::scoring
