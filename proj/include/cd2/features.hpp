#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cd2/imaging.hpp"

namespace cd2::features {

inline constexpr int kBins = 16;

/// Partition of the gradient domain [0,1020] into 16 bins. Bin b covers
/// [edges[b], edges[b+1]); edges[16] is the exclusive sentinel 1021.
class BinningScheme {
 public:
  /// Identifier of the default power-of-two scheme on the wire.
  static constexpr std::uint8_t kDefaultId = 1;
  /// Identifier carried by user-supplied edge tables. Not encodable.
  static constexpr std::uint8_t kCustomId = 0;

  explicit BinningScheme(const std::array<std::uint16_t, kBins + 1>& edges,
                         std::uint8_t id = kCustomId);

  const std::array<std::uint16_t, kBins + 1>& edges() const { return edges_; }
  std::uint8_t id() const { return id_; }

  /// Throws OutOfDomain for g > 1020.
  int bin_index(int g) const;
  /// Unchecked; g must be in [0,1020].
  int bin_of(std::uint16_t g) const { return lut_[g]; }

  bool operator==(const BinningScheme& other) const {
    return id_ == other.id_ && edges_ == other.edges_;
  }

 private:
  std::array<std::uint16_t, kBins + 1> edges_;
  std::uint8_t id_;
  std::array<std::uint8_t, imaging::kMaxGradient + 1> lut_{};
};

/// Powers of two 1..512 plus the geometric midpoints 24, 48, 96, 192, 384.
const BinningScheme& default_bin_edges();

int bin_index(int g, const BinningScheme& scheme);

/// M x N patch layout over a width x height image. Patch column k spans
/// [floor(k*width/N), floor((k+1)*width/N)), likewise for rows.
class PatchGrid {
 public:
  PatchGrid() = default;
  /// Throws GridTooFine when a patch would be empty.
  PatchGrid(int rows, int cols, int width, int height);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int patch_count() const { return rows_ * cols_; }

  int col_begin(int b) const { return static_cast<int>(static_cast<long long>(b) * width_ / cols_); }
  int row_begin(int a) const { return static_cast<int>(static_cast<long long>(a) * height_ / rows_); }
  int patch_width(int b) const { return col_begin(b + 1) - col_begin(b); }
  int patch_height(int a) const { return row_begin(a + 1) - row_begin(a); }
  std::uint64_t patch_pixels(int a, int b) const {
    return static_cast<std::uint64_t>(patch_width(b)) * static_cast<std::uint64_t>(patch_height(a));
  }

  /// Column -> patch column lookup, one entry per pixel column.
  std::vector<int> column_map() const;
  /// Row -> patch row lookup.
  std::vector<int> row_map() const;

  bool operator==(const PatchGrid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int width_ = 0;
  int height_ = 0;
};

struct ContrastHistogram {
  std::array<std::uint32_t, kBins> counts{};

  std::uint64_t total() const;
  /// counts / total; undefined for an empty histogram.
  std::array<double, kBins> normalized() const;

  ContrastHistogram& operator+=(const ContrastHistogram& other);
  bool operator==(const ContrastHistogram&) const = default;
};

/// The image signature: paired gx/gy histograms for every patch, stored
/// row-major by patch (index a * cols + b).
struct FeatureSet {
  int width = 0;
  int height = 0;
  PatchGrid grid;
  BinningScheme scheme = default_bin_edges();
  std::vector<ContrastHistogram> hist_x;
  std::vector<ContrastHistogram> hist_y;

  const ContrastHistogram& x(int a, int b) const { return hist_x[static_cast<std::size_t>(a) * grid.cols() + b]; }
  const ContrastHistogram& y(int a, int b) const { return hist_y[static_cast<std::size_t>(a) * grid.cols() + b]; }

  /// Sum of all patch histograms per axis.
  ContrastHistogram pooled_x() const;
  ContrastHistogram pooled_y() const;

  /// Checks the conservation invariant; throws CountOverflow on violation.
  void validate() const;

  bool operator==(const FeatureSet&) const = default;
};

struct GridSize {
  int rows = 6;
  int cols = 16;
};

FeatureSet extract_features(const imaging::LuminanceMap& lum, GridSize grid,
                            const BinningScheme& scheme = default_bin_edges());

/// Scanline extractor that keeps a three-row luminance window plus the
/// histogram state. Rows must be pushed top to bottom exactly once.
class StreamingExtractor {
 public:
  StreamingExtractor(int width, int height, GridSize grid,
                     const BinningScheme& scheme = default_bin_edges());

  /// Throws StreamOverrun past the declared height and InvalidArgument for
  /// a row of the wrong width.
  void push_row(std::span<const std::uint8_t> row);
  int rows_received() const { return received_; }
  /// Throws StreamTruncated if fewer rows than the declared height arrived.
  FeatureSet finish();

 private:
  void emit_row(int y, const std::uint8_t* up, const std::uint8_t* mid, const std::uint8_t* down);
  std::uint8_t* slot(int y) { return window_[static_cast<std::size_t>(y % 3)].data(); }

  FeatureSet fs_;
  std::vector<int> col_patch_;
  std::vector<int> row_patch_;
  std::array<std::vector<std::uint8_t>, 3> window_;
  std::vector<std::int16_t> gx_;
  std::vector<std::int16_t> gy_;
  int received_ = 0;
  bool finished_ = false;
};

/// Drives a StreamingExtractor from a row source. The callback fills the
/// given buffer with the next row and returns false when the feed ends.
FeatureSet extract_features_streaming(const std::function<bool(std::span<std::uint8_t>)>& next_row,
                                      int width, int height, GridSize grid,
                                      const BinningScheme& scheme = default_bin_edges());

}  // namespace cd2::features
