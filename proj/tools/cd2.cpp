// cd2 command-line front end: extract, compare, score, heatmap, train, eval,
// analyze.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cd2/boosting.hpp"
#include "cd2/distances.hpp"
#include "cd2/error.hpp"
#include "cd2/evaluation.hpp"
#include "cd2/features.hpp"
#include "cd2/image_io.hpp"
#include "cd2/scoring.hpp"
#include "cd2/signature.hpp"

namespace {

using namespace cd2;

enum Exit { kOk = 0, kGeneric = 1, kInputIo = 2, kIncompatible = 3, kConfig = 4 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::UnreadablePath:
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::TrailingData:
    case ErrorCode::CountOverflow:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidImage:
      return kInputIo;
    case ErrorCode::SchemeMismatch:
    case ErrorCode::GridMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::VersionMismatch:
    case ErrorCode::FeatureOrderMismatch:
      return kIncompatible;
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownOperation:
    case ErrorCode::MissingColumn:
    case ErrorCode::GridTooFine:
      return kConfig;
    default:
      return kGeneric;
  }
}

struct Options {
  std::string grid = "6x16";
  double eps = distances::kDefaultKlEpsilon;
  std::string agg = "abs";
  std::string thresholds;
  std::string operation;
  std::string heatmap;
  bool upscale = false;
  std::uint64_t seed = 0;
  std::string model;
  std::vector<std::string> methods;
  std::string output;
  std::string csv;
  std::string manifest;
  std::string reference;
  std::string processed;
  std::vector<std::string> inputs;
  int folds = 5;
  std::string split = "group";
  boosting::TrainConfig train;
};

features::GridSize parse_grid(const std::string& text) {
  features::GridSize g;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> g.rows >> x >> g.cols) || (x != 'x' && x != 'X') || !in.eof() || g.rows < 1 || g.cols < 1) {
    throw Error(ErrorCode::ConfigError, "--grid expects MxN, got '" + text + "'");
  }
  return g;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

features::FeatureSet load_signature(const std::string& path) {
  const auto bytes = read_bytes(path);
  return features::decode_signature(bytes);
}

// Processed side: a .cd2 signature or an image extracted on the reference grid.
features::FeatureSet load_processed(const std::string& path, const features::FeatureSet& ref) {
  const auto bytes = read_bytes(path);
  if (features::has_signature_magic(bytes)) return features::decode_signature(bytes);
  const auto lum = io::load_luminance(path);
  if (lum.width != ref.width || lum.height != ref.height) {
    throw Error(ErrorCode::DimensionMismatch, "processed image is " + std::to_string(lum.width) + "x" +
                                                  std::to_string(lum.height) + ", signature is " +
                                                  std::to_string(ref.width) + "x" + std::to_string(ref.height));
  }
  return features::extract_features(lum, {ref.grid.rows(), ref.grid.cols()}, ref.scheme);
}

evaluation::EvalConfig eval_config(const Options& o) {
  evaluation::EvalConfig cfg;
  cfg.grid = parse_grid(o.grid);
  cfg.eps = o.eps;
  cfg.aggregation = scoring::parse_aggregation(o.agg);
  cfg.folds = o.folds;
  cfg.seed = o.seed;
  if (o.split == "group") {
    cfg.split = evaluation::SplitMode::ByReference;
  } else if (o.split == "row") {
    cfg.split = evaluation::SplitMode::ByRow;
  } else {
    throw Error(ErrorCode::ConfigError, "--split expects group or row");
  }
  cfg.train = o.train;
  cfg.train.seed = o.seed;
  cfg.train.validate();
  return cfg;
}

void report_skipped(const std::vector<evaluation::RowIssue>& issues, const char* what) {
  for (const auto& i : issues) std::cerr << what << " line " << i.line << ": " << i.message << '\n';
}

int cmd_extract(const Options& o) {
  const auto lum = io::load_luminance(o.reference);
  const auto fs = features::extract_features(lum, parse_grid(o.grid));
  const auto bytes = features::encode_signature(fs);
  write_bytes(bytes, o.output);
  const auto pixels = static_cast<std::uint64_t>(fs.width) * static_cast<std::uint64_t>(fs.height);
  const auto bits = features::signature_payload_bits(fs);
  std::cout << "wrote " << o.output << ": " << bytes.size() << " bytes (header "
            << features::kSignatureHeaderSize << ", payload " << (bits + 7) / 8 << " bytes = " << bits << " bits, "
            << features::signature_bin_bits(pixels, fs.grid.patch_count()) << " bits per bin, grid "
            << fs.grid.rows() << "x" << fs.grid.cols() << ")\n";
  return kOk;
}

void print_classification(const Options& o, const scoring::Cd2aScore& score) {
  if (o.thresholds.empty()) return;
  if (o.operation.empty()) throw Error(ErrorCode::ConfigError, "--thresholds needs --operation");
  const auto table = scoring::ThresholdTable::load(o.thresholds);
  const double tau = table.tau(o.operation);
  std::cout << "classification " << scoring::to_string(scoring::classify(score, tau)) << " (operation "
            << o.operation << ", tau " << tau << ")\n";
}

void write_heatmap(const Options& o, const scoring::DistortionMap& map, const features::FeatureSet& ref) {
  std::optional<features::PatchGrid> grid;
  if (o.upscale) grid = ref.grid;
  const auto img = scoring::render_heatmap(map, grid);
  io::write_gray(img, o.heatmap);
  std::cout << "heatmap " << o.heatmap << " (" << img.width << "x" << img.height << ")\n";
}

int cmd_compare(const Options& o, bool with_distances) {
  const auto ref = load_signature(o.reference);
  const auto proc = load_processed(o.processed, ref);
  const auto map = scoring::distortion_map(ref, proc, o.eps);
  const auto score = scoring::cd2a_score(map, scoring::parse_aggregation(o.agg));
  std::cout << std::setprecision(10);
  std::cout << "cd2a_score " << score.value << " (" << scoring::to_string(score.aggregation) << ")\n";
  print_classification(o, score);
  if (with_distances) {
    const auto d = distances::distance_vector(ref, proc, o.eps);
    std::cout << "distances\n";
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      std::cout << "  " << distances::distance_names()[i] << ' ' << d[i] << '\n';
    }
  }
  if (!o.heatmap.empty()) write_heatmap(o, map, ref);
  return kOk;
}

int cmd_heatmap(const Options& o) {
  const auto ref = load_signature(o.reference);
  const auto proc = load_processed(o.processed, ref);
  write_heatmap(o, scoring::distortion_map(ref, proc, o.eps), ref);
  return kOk;
}

evaluation::DatasetManifest load_manifest_reporting(const std::string& path) {
  auto manifest = evaluation::load_manifest(path);
  report_skipped(manifest.skipped, "skipped manifest");
  return manifest;
}

int cmd_train(const Options& o) {
  const auto manifest = load_manifest_reporting(o.manifest);
  const auto cfg = eval_config(o);
  const auto data = evaluation::measure_pairs(manifest, io::load_luminance, cfg);
  report_skipped(data.failures, "failed");
  std::vector<distances::DistanceVector> x;
  std::vector<double> y;
  for (const auto& p : data.pairs) {
    x.push_back(p.distances);
    y.push_back(p.dmos);
  }
  const auto model = boosting::train(x, y, cfg.train);
  boosting::save_model_file(model, o.model);
  std::cout << "trained " << model.trees.size() << " trees on " << x.size() << " pairs -> " << o.model << '\n';
  if (model.degenerate_targets) std::cout << "note: constant DMOS targets, model predicts the mean only\n";
  const bool failed = !data.failures.empty() || !manifest.skipped.empty();
  return failed ? kGeneric : kOk;
}

int cmd_eval(const Options& o) {
  const auto manifest = load_manifest_reporting(o.manifest);
  const auto cfg = eval_config(o);
  const auto data = evaluation::measure_pairs(manifest, io::load_luminance, cfg);
  report_skipped(data.failures, "failed");

  std::vector<std::string> methods = o.methods;
  if (methods.empty()) methods = {"cd2a", "cd2b", "psnr"};
  std::vector<evaluation::MetricsReport> reports;
  bool undefined = false;
  for (const auto& m : methods) {
    evaluation::MetricsReport r;
    if (m == "cd2a") {
      r = evaluation::evaluate_cd2a(data);
    } else if (m == "psnr") {
      r = evaluation::evaluate_psnr(data);
    } else if (m == "cd2b" && !o.model.empty()) {
      // Fixed model: score every pair without cross-validation.
      const auto model = boosting::load_model_file(o.model);
      std::vector<double> pred;
      std::vector<double> truth;
      for (const auto& p : data.pairs) {
        pred.push_back(boosting::predict(model, p.distances));
        truth.push_back(p.dmos);
      }
      r.method = "cd2b";
      r.rows = data.pairs.size();
      r.failed_rows = data.failures.size();
      r.rmse = evaluation::rmse(pred, truth);
      try {
        r.plcc = evaluation::plcc(pred, truth);
        r.srocc = evaluation::srocc(pred, truth);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateVariance) throw;
        r.notes.push_back("correlation undefined: degenerate variance");
      }
      r.predictions = pred;
      r.notes.push_back("pretrained model " + o.model + ", no cross-validation");
    } else if (m == "cd2b") {
      r = evaluation::evaluate_cd2b(data, cfg);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown method '" + m + "'");
    }
    undefined = undefined || !r.plcc || !r.srocc;
    evaluation::write_report_text(r, std::cout);
    reports.push_back(std::move(r));
  }
  if (!o.csv.empty()) {
    std::ofstream out(o.csv);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + o.csv);
    evaluation::write_reports_csv(reports, out);
  }
  const bool failed = !data.failures.empty() || !manifest.skipped.empty();
  if (failed) std::cerr << (data.failures.size() + manifest.skipped.size()) << " row(s) failed\n";
  if (undefined) std::cerr << "one or more metrics were undefined\n";
  return failed || undefined ? kGeneric : kOk;
}

int cmd_analyze(const Options& o) {
  std::vector<std::string> paths;
  std::size_t skipped_rows = 0;
  for (const auto& in : o.inputs) {
    if (in.size() > 4 && in.substr(in.size() - 4) == ".csv") {
      const auto manifest = load_manifest_reporting(in);
      skipped_rows += manifest.skipped.size();
      std::set<std::string> seen;
      for (const auto& r : manifest.rows) {
        if (seen.insert(r.reference).second) paths.push_back(r.reference);
      }
    } else {
      paths.push_back(in);
    }
  }
  std::vector<imaging::LuminanceMap> images;
  for (const auto& p : paths) images.push_back(io::load_luminance(p));
  const auto report = evaluation::gradient_dependency_analysis(images);
  evaluation::write_correlation_report(report, std::cout);
  return skipped_rows ? kGeneric : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CD2 reduced-reference image quality: contrast-histogram signatures and distances"};
  app.require_subcommand(1);
  Options o;

  auto add_grid = [&](CLI::App* c) { c->add_option("--grid", o.grid, "patch grid MxN")->capture_default_str(); };
  auto add_eps = [&](CLI::App* c) { c->add_option("--eps", o.eps, "KL smoothing constant")->capture_default_str(); };
  auto add_agg = [&](CLI::App* c) {
    c->add_option("--agg", o.agg, "CD2-A aggregation")->check(CLI::IsMember({"abs", "sq"}))->capture_default_str();
  };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "random seed")->capture_default_str(); };
  auto add_thresholds = [&](CLI::App* c) {
    c->add_option("--thresholds", o.thresholds, "threshold table (operation=tau per line)");
    c->add_option("--operation", o.operation, "operation label looked up in the threshold table");
  };
  auto add_heatmap = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--heatmap", o.heatmap, "write the per-patch KL map (.pgm or .png)");
    if (required) opt->required();
    c->add_flag("--upscale", o.upscale, "expand heatmap cells to the image size");
  };
  auto add_training = [&](CLI::App* c) {
    c->add_option("--trees", o.train.trees)->capture_default_str();
    c->add_option("--depth", o.train.max_depth)->capture_default_str();
    c->add_option("--learning-rate", o.train.learning_rate)->capture_default_str();
    c->add_option("--min-leaf", o.train.min_samples_leaf)->capture_default_str();
    c->add_option("--feature-fraction", o.train.feature_fraction)->capture_default_str();
  };

  auto* extract = app.add_subcommand("extract", "write the signature of an image");
  extract->add_option("image", o.reference)->required();
  extract->add_option("-o,--output", o.output, "signature path (.cd2)")->required();
  add_grid(extract);

  auto* compare = app.add_subcommand("compare", "CD2-A score and distance vector of a processed image");
  compare->add_option("reference", o.reference, "reference signature (.cd2)")->required();
  compare->add_option("processed", o.processed, "processed image or signature")->required();
  add_eps(compare);
  add_agg(compare);
  add_thresholds(compare);
  add_heatmap(compare, false);

  auto* score = app.add_subcommand("score", "CD2-A score and safety classification");
  score->add_option("reference", o.reference)->required();
  score->add_option("processed", o.processed)->required();
  add_eps(score);
  add_agg(score);
  add_thresholds(score);

  auto* heatmap = app.add_subcommand("heatmap", "render the per-patch distortion map");
  heatmap->add_option("reference", o.reference)->required();
  heatmap->add_option("processed", o.processed)->required();
  add_eps(heatmap);
  add_heatmap(heatmap, true);

  auto* train = app.add_subcommand("train", "fit the CD2-B model on a manifest");
  train->add_option("manifest", o.manifest)->required();
  train->add_option("--model", o.model, "output model path (.cd2b)")->required();
  add_grid(train);
  add_eps(train);
  add_seed(train);
  add_training(train);

  auto* eval = app.add_subcommand("eval", "benchmark cd2a/cd2b/psnr against DMOS");
  eval->add_option("manifest", o.manifest)->required();
  eval->add_option("--method", o.methods, "cd2a, cd2b or psnr (repeatable; default all)")
      ->check(CLI::IsMember({"cd2a", "cd2b", "psnr"}));
  eval->add_option("--model", o.model, "use a trained model for cd2b instead of cross-validation");
  eval->add_option("--folds", o.folds)->capture_default_str();
  eval->add_option("--split", o.split, "group (by reference image) or row")->capture_default_str();
  eval->add_option("--csv", o.csv, "also write the metrics as CSV");
  add_grid(eval);
  add_eps(eval);
  add_agg(eval);
  add_seed(eval);
  add_training(eval);

  auto* analyze = app.add_subcommand("analyze", "gx/gy dependency statistics");
  analyze->add_option("inputs", o.inputs, "manifest (.csv) or image files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*extract) return cmd_extract(o);
    if (*compare) return cmd_compare(o, true);
    if (*score) return cmd_compare(o, false);
    if (*heatmap) return cmd_heatmap(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*analyze) return cmd_analyze(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneric;
  }
  return kGeneric;
}
