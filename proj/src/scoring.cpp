#include "cd2/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cd2/error.hpp"

namespace cd2::scoring {

DistortionMap distortion_map(const features::FeatureSet& ref, const features::FeatureSet& proc, double eps) {
  if (!(ref.scheme == proc.scheme)) throw Error(ErrorCode::SchemeMismatch, "feature sets use different binning");
  if (!(ref.grid == proc.grid)) {
    throw Error(ErrorCode::GridMismatch, "feature sets differ in grid or image size");
  }
  DistortionMap map;
  map.rows = ref.grid.rows();
  map.cols = ref.grid.cols();
  map.values.resize(ref.hist_x.size());
  for (std::size_t p = 0; p < map.values.size(); ++p) {
    map.values[p] =
        distances::kl_divergence(distances::normalize(ref.hist_x[p]), distances::normalize(proc.hist_x[p]), eps) +
        distances::kl_divergence(distances::normalize(ref.hist_y[p]), distances::normalize(proc.hist_y[p]), eps);
  }
  return map;
}

Cd2aScore cd2a_score(const DistortionMap& map, Aggregation aggregation) {
  double s = 0.0;
  for (double v : map.values) s += aggregation == Aggregation::SumAbs ? std::abs(v) : v * v;
  return {s, aggregation};
}

ThresholdTable ThresholdTable::parse(std::istream& in) {
  ThresholdTable table;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected operation=tau");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    std::istringstream vs(val);
    double tau = 0.0;
    if (key.empty() || !(vs >> tau) || !vs.eof()) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": cannot parse '" + line + "'");
    }
    table.set(key, tau);
  }
  return table;
}

ThresholdTable ThresholdTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open threshold table " + path);
  return parse(in);
}

void ThresholdTable::set(const std::string& operation, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::ConfigError, "threshold for '" + operation + "' must be a positive number");
  }
  taus_[operation] = tau;
}

double ThresholdTable::tau(const std::string& operation) const {
  const auto it = taus_.find(operation);
  if (it == taus_.end()) throw Error(ErrorCode::UnknownOperation, "no threshold for operation '" + operation + "'");
  return it->second;
}

Safety classify(const Cd2aScore& score, double tau) { return score.value >= tau ? Safety::Unsafe : Safety::Safe; }

Safety classify(const Cd2aScore& score, const std::string& operation, const ThresholdTable& table) {
  return classify(score, table.tau(operation));
}

std::string_view to_string(Safety s) { return s == Safety::Safe ? "safe" : "unsafe"; }

std::string_view to_string(Aggregation a) { return a == Aggregation::SumAbs ? "sum-abs" : "sum-squares"; }

Aggregation parse_aggregation(std::string_view text) {
  if (text == "abs" || text == "sum-abs") return Aggregation::SumAbs;
  if (text == "sq" || text == "sum-squares") return Aggregation::SumSquares;
  throw Error(ErrorCode::ConfigError, "unknown aggregation '" + std::string(text) + "'");
}

GrayImage render_heatmap(const DistortionMap& map, std::optional<features::PatchGrid> upscale_to) {
  const double peak = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  auto shade = [peak](double v) -> std::uint8_t {
    if (!(peak > 0.0)) return 0;
    return static_cast<std::uint8_t>(std::lround(std::clamp(v / peak, 0.0, 1.0) * 255.0));
  };

  GrayImage img;
  if (!upscale_to) {
    img.width = map.cols;
    img.height = map.rows;
    img.data.resize(map.values.size());
    std::transform(map.values.begin(), map.values.end(), img.data.begin(), shade);
    return img;
  }
  const auto& grid = *upscale_to;
  if (grid.rows() != map.rows || grid.cols() != map.cols) {
    throw Error(ErrorCode::GridMismatch, "upscale grid does not match the distortion map");
  }
  img.width = grid.width();
  img.height = grid.height();
  img.data.resize(static_cast<std::size_t>(img.width) * img.height);
  const auto cols = grid.column_map();
  const auto rows = grid.row_map();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      img.data[static_cast<std::size_t>(y) * img.width + x] = shade(map.at(rows[y], cols[x]));
    }
  }
  return img;
}

void write_pgm(const GrayImage& img, std::ostream& out) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing PGM");
}

void write_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_pgm(img, out);
}

}  // namespace cd2::scoring
