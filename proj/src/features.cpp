#include "cd2/features.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "cd2/error.hpp"

namespace cd2::features {

using imaging::kMaxGradient;

BinningScheme::BinningScheme(const std::array<std::uint16_t, kBins + 1>& edges, std::uint8_t id)
    : edges_(edges), id_(id) {
  if (edges_.front() != 0 || edges_.back() != kMaxGradient + 1) {
    throw Error(ErrorCode::InvalidArgument, "bin edges must start at 0 and end at 1021");
  }
  for (int b = 0; b < kBins; ++b) {
    if (edges_[b] >= edges_[b + 1]) {
      throw Error(ErrorCode::InvalidArgument, "bin edges must be strictly increasing");
    }
    for (int g = edges_[b]; g < edges_[b + 1]; ++g) lut_[g] = static_cast<std::uint8_t>(b);
  }
}

int BinningScheme::bin_index(int g) const {
  if (g < 0 || g > kMaxGradient) {
    throw Error(ErrorCode::OutOfDomain, "gradient " + std::to_string(g) + " outside [0,1020]");
  }
  return lut_[g];
}

const BinningScheme& default_bin_edges() {
  static const BinningScheme scheme(
      {0, 1, 2, 4, 8, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 1021},
      BinningScheme::kDefaultId);
  return scheme;
}

int bin_index(int g, const BinningScheme& scheme) { return scheme.bin_index(g); }

PatchGrid::PatchGrid(int rows, int cols, int width, int height)
    : rows_(rows), cols_(cols), width_(width), height_(height) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid must have at least one row and column");
  }
  if (rows > height || cols > width) {
    throw Error(ErrorCode::GridTooFine, std::to_string(rows) + "x" + std::to_string(cols) +
                                            " grid leaves empty patches on a " + std::to_string(width) +
                                            "x" + std::to_string(height) + " image");
  }
}

std::vector<int> PatchGrid::column_map() const {
  std::vector<int> map(static_cast<std::size_t>(width_));
  for (int b = 0; b < cols_; ++b) {
    std::fill(map.begin() + col_begin(b), map.begin() + col_begin(b + 1), b);
  }
  return map;
}

std::vector<int> PatchGrid::row_map() const {
  std::vector<int> map(static_cast<std::size_t>(height_));
  for (int a = 0; a < rows_; ++a) {
    std::fill(map.begin() + row_begin(a), map.begin() + row_begin(a + 1), a);
  }
  return map;
}

std::uint64_t ContrastHistogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::array<double, kBins> ContrastHistogram::normalized() const {
  std::array<double, kBins> p{};
  const double t = static_cast<double>(total());
  for (int i = 0; i < kBins; ++i) p[i] = counts[i] / t;
  return p;
}

ContrastHistogram& ContrastHistogram::operator+=(const ContrastHistogram& other) {
  for (int i = 0; i < kBins; ++i) counts[i] += other.counts[i];
  return *this;
}

namespace {

ContrastHistogram pool(const std::vector<ContrastHistogram>& hs) {
  ContrastHistogram out;
  for (const auto& h : hs) out += h;
  return out;
}

FeatureSet empty_feature_set(int width, int height, GridSize grid, const BinningScheme& scheme) {
  imaging::detail::check_gradient_dims(width, height);
  FeatureSet fs;
  fs.width = width;
  fs.height = height;
  fs.grid = PatchGrid(grid.rows, grid.cols, width, height);
  fs.scheme = scheme;
  fs.hist_x.resize(static_cast<std::size_t>(fs.grid.patch_count()));
  fs.hist_y.resize(static_cast<std::size_t>(fs.grid.patch_count()));
  return fs;
}

// Bins one row of signed responses into the patch histograms of that row.
void accumulate_row(FeatureSet& fs, const std::vector<int>& col_patch, int patch_row,
                    const std::int16_t* gx, const std::int16_t* gy) {
  const std::size_t base = static_cast<std::size_t>(patch_row) * fs.grid.cols();
  ContrastHistogram* hx = fs.hist_x.data() + base;
  ContrastHistogram* hy = fs.hist_y.data() + base;
  for (int x = 0; x < fs.width; ++x) {
    const int p = col_patch[x];
    ++hx[p].counts[fs.scheme.bin_of(static_cast<std::uint16_t>(std::abs(gx[x])))];
    ++hy[p].counts[fs.scheme.bin_of(static_cast<std::uint16_t>(std::abs(gy[x])))];
  }
}

}  // namespace

ContrastHistogram FeatureSet::pooled_x() const { return pool(hist_x); }
ContrastHistogram FeatureSet::pooled_y() const { return pool(hist_y); }

void FeatureSet::validate() const {
  const auto n = static_cast<std::size_t>(grid.patch_count());
  if (hist_x.size() != n || hist_y.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "histogram count does not match grid");
  }
  for (int a = 0; a < grid.rows(); ++a) {
    for (int b = 0; b < grid.cols(); ++b) {
      const auto expected = grid.patch_pixels(a, b);
      if (x(a, b).total() != expected || y(a, b).total() != expected) {
        throw Error(ErrorCode::CountOverflow, "patch (" + std::to_string(a) + "," + std::to_string(b) +
                                                  ") histogram does not sum to its pixel count");
      }
    }
  }
}

FeatureSet extract_features(const imaging::LuminanceMap& lum, GridSize grid, const BinningScheme& scheme) {
  FeatureSet fs = empty_feature_set(lum.width, lum.height, grid, scheme);
  const auto col_patch = fs.grid.column_map();
  const auto row_patch = fs.grid.row_map();
  const imaging::SignedGradientField g = imaging::sobel_signed(lum);
  for (int y = 0; y < lum.height; ++y) {
    const std::size_t off = static_cast<std::size_t>(y) * lum.width;
    accumulate_row(fs, col_patch, row_patch[y], g.gx.data() + off, g.gy.data() + off);
  }
  return fs;
}

StreamingExtractor::StreamingExtractor(int width, int height, GridSize grid, const BinningScheme& scheme)
    : fs_(empty_feature_set(width, height, grid, scheme)),
      col_patch_(fs_.grid.column_map()),
      row_patch_(fs_.grid.row_map()),
      gx_(static_cast<std::size_t>(width)),
      gy_(static_cast<std::size_t>(width)) {
  for (auto& r : window_) r.resize(static_cast<std::size_t>(width));
}

void StreamingExtractor::emit_row(int y, const std::uint8_t* up, const std::uint8_t* mid,
                                  const std::uint8_t* down) {
  imaging::detail::sobel_row(up, mid, down, fs_.width, gx_.data(), gy_.data());
  accumulate_row(fs_, col_patch_, row_patch_[y], gx_.data(), gy_.data());
}

void StreamingExtractor::push_row(std::span<const std::uint8_t> row) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "extractor already finished");
  if (received_ >= fs_.height) {
    throw Error(ErrorCode::StreamOverrun, "more rows than the declared height " + std::to_string(fs_.height));
  }
  if (row.size() != static_cast<std::size_t>(fs_.width)) {
    throw Error(ErrorCode::InvalidArgument, "row has " + std::to_string(row.size()) + " pixels, expected " +
                                                std::to_string(fs_.width));
  }
  const int y = received_;
  std::copy(row.begin(), row.end(), slot(y));
  ++received_;
  // Row y-1 becomes computable once row y is known.
  if (y >= 1) {
    const int c = y - 1;
    emit_row(c, slot(c == 0 ? 0 : c - 1), slot(c), slot(y));
  }
  if (received_ == fs_.height) {
    emit_row(y, slot(y - 1), slot(y), slot(y));
  }
}

FeatureSet StreamingExtractor::finish() {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "extractor already finished");
  if (received_ < fs_.height) {
    throw Error(ErrorCode::StreamTruncated, "received " + std::to_string(received_) + " of " +
                                                std::to_string(fs_.height) + " rows");
  }
  finished_ = true;
  return std::move(fs_);
}

FeatureSet extract_features_streaming(const std::function<bool(std::span<std::uint8_t>)>& next_row,
                                      int width, int height, GridSize grid, const BinningScheme& scheme) {
  StreamingExtractor ex(width, height, grid, scheme);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(width));
  while (ex.rows_received() < height && next_row(buf)) ex.push_row(buf);
  return ex.finish();
}

}  // namespace cd2::features
