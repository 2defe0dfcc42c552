#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cd2/boosting.hpp"
#include "cd2/distances.hpp"
#include "cd2/error.hpp"
#include "cd2/features.hpp"
#include "cd2/imaging.hpp"
#include "cd2/scoring.hpp"

namespace cd2::evaluation {

// ---------------------------------------------------------------- manifests

struct ManifestRow {
  std::string reference;
  std::string distorted;
  double dmos = 0.0;
  std::string distortion;
  std::string ref_id;
  int line = 0;
};

/// A row that was dropped (at load time) or failed (at evaluation time).
struct RowIssue {
  int line = 0;
  ErrorCode code = ErrorCode::ParseError;
  std::string message;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::vector<RowIssue> skipped;
};

/// CSV with header columns ref,dist,dmos,type,ref_id (any order, extra
/// columns ignored). Relative paths resolve against `base_dir`. A missing
/// header column throws MissingColumn; bad rows are recorded in `skipped`.
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir, bool check_paths);
DatasetManifest load_manifest(const std::string& path, bool check_paths = true);

// --------------------------------------------------------------- splitting

enum class SplitMode {
  ByReference,  ///< all pairs of one source image land in the same fold
  ByRow,        ///< plain row-wise folds, for comparison with row-split results
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Deterministic per seed. Throws TooFewGroups when there are fewer than k
/// groups (or rows, for ByRow).
std::vector<Fold> kfold_split(std::span<const std::string> groups, int k, std::uint64_t seed,
                              SplitMode mode = SplitMode::ByReference);
std::vector<Fold> kfold_split(const DatasetManifest& manifest, int k, std::uint64_t seed,
                              SplitMode mode = SplitMode::ByReference);

// ----------------------------------------------------------------- metrics

/// Throw LengthMismatch for unequal lengths, EmptyDataset for no samples.
double rmse(std::span<const double> pred, std::span<const double> truth);
/// Also throws DegenerateVariance when either side is constant.
double plcc(std::span<const double> pred, std::span<const double> truth);
/// Pearson on average ranks (ties share the mean rank).
double srocc(std::span<const double> pred, std::span<const double> truth);

std::vector<double> average_ranks(std::span<const double> v);

struct AffineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double operator()(double x) const { return intercept + slope * x; }
};

/// Least squares truth ~ a + b * x. A constant x yields slope 0.
AffineFit fit_affine(std::span<const double> x, std::span<const double> truth);

/// 10 log10(255^2 / MSE) in dB; +infinity for identical images.
double psnr(const imaging::LuminanceMap& ref, const imaging::LuminanceMap& proc);

// ------------------------------------------------- gradient dependency

struct DependencyStats {
  double pearson = 0.0;
  double spearman = 0.0;
  double iqr = 0.0;
};

struct Spread {
  double median = 0.0;
  double stddev = 0.0;
};

struct CorrelationReport {
  std::vector<DependencyStats> per_image;
  Spread pearson;
  Spread spearman;
  Spread iqr;
  /// Images whose statistics were undefined (e.g. flat images); excluded
  /// from the spreads.
  int skipped = 0;
};

/// MI(X;Y) / H(X,Y) from the joint 16x16 histogram of binned samples.
/// Natural log. Returns NaN when the joint entropy is zero.
double information_quality_ratio(std::span<const std::uint16_t> gx, std::span<const std::uint16_t> gy,
                                 const features::BinningScheme& scheme = features::default_bin_edges());

/// Pearson and Spearman of the signed (gx, gy) pairs and the IQR of their
/// absolute values, over interior pixels (the replicated border is left out).
DependencyStats gradient_dependency(const imaging::LuminanceMap& lum);

CorrelationReport gradient_dependency_analysis(std::span<const imaging::LuminanceMap> images);

// -------------------------------------------------------------- benchmarks

using ImageLoader = std::function<imaging::LuminanceMap(const std::string& path)>;

struct EvalConfig {
  features::GridSize grid{};
  double eps = distances::kDefaultKlEpsilon;
  scoring::Aggregation aggregation = scoring::Aggregation::SumAbs;
  int folds = 5;
  std::uint64_t seed = 0;
  SplitMode split = SplitMode::ByReference;
  boosting::TrainConfig train{};
  /// 0 picks CD2_THREADS or the hardware concurrency.
  int threads = 0;
};

/// Everything the three methods need for one manifest row.
struct PairMeasurement {
  std::size_t row = 0;
  double dmos = 0.0;
  std::string ref_id;
  double cd2a = 0.0;
  distances::DistanceVector distances;
  double psnr = 0.0;
};

struct MeasuredDataset {
  std::vector<PairMeasurement> pairs;  ///< manifest order
  std::vector<RowIssue> failures;
};

/// Rows are processed in parallel; output order follows the manifest.
MeasuredDataset measure_pairs(const DatasetManifest& manifest, const ImageLoader& loader, const EvalConfig& cfg);

struct FoldMetrics {
  int fold = 0;
  std::size_t n = 0;
  double rmse = 0.0;
  std::optional<double> plcc;
  std::optional<double> srocc;
};

struct MetricsReport {
  std::string method;
  std::size_t rows = 0;
  double rmse = 0.0;
  std::optional<double> plcc;  ///< empty when undefined (degenerate variance)
  std::optional<double> srocc;
  std::vector<FoldMetrics> folds;
  std::vector<double> predictions;  ///< DMOS-scale predictions, pair order
  std::vector<std::string> notes;
  std::size_t failed_rows = 0;
};

/// CD2-A: correlations on raw scores; RMSE after an affine fit to DMOS.
MetricsReport evaluate_cd2a(const MeasuredDataset& data);
/// PSNR baseline, scored as -min(PSNR, 100 dB) so that larger means worse.
MetricsReport evaluate_psnr(const MeasuredDataset& data);
/// CD2-B: k-fold training; headline metrics are the means over folds.
MetricsReport evaluate_cd2b(const MeasuredDataset& data, const EvalConfig& cfg);

MetricsReport run_cd2a_eval(const DatasetManifest& manifest, const ImageLoader& loader, const EvalConfig& cfg);
MetricsReport run_cd2b_eval(const DatasetManifest& manifest, const ImageLoader& loader, const EvalConfig& cfg);

/// Human-readable block and CSV lines (header + one row per report).
void write_report_text(const MetricsReport& report, std::ostream& out);
void write_reports_csv(std::span<const MetricsReport> reports, std::ostream& out);
void write_correlation_report(const CorrelationReport& report, std::ostream& out);

/// Worker count used for parallel evaluation.
int resolve_threads(int requested);

}  // namespace cd2::evaluation
