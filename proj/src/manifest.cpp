#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cd2/evaluation.hpp"

namespace cd2::evaluation {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir, bool check_paths) {
  DatasetManifest manifest;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, "manifest has no header row");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : {"ref", "dist", "dmos", "type", "ref_id"}) {
    if (!col.count(name)) throw Error(ErrorCode::MissingColumn, std::string("manifest lacks column '") + name + "'");
  }

  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path.string() : (base_dir / path).string();
  };

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    auto field = [&](const char* name) -> std::string {
      const auto i = col.at(name);
      return i < f.size() ? f[i] : std::string{};
    };
    ManifestRow row;
    row.line = lineno;
    row.reference = field("ref");
    row.distorted = field("dist");
    row.distortion = field("type");
    row.ref_id = field("ref_id");
    const std::string dmos = field("dmos");
    if (row.reference.empty() || row.distorted.empty() || dmos.empty() || row.ref_id.empty()) {
      manifest.skipped.push_back({lineno, ErrorCode::MissingColumn, "row has an empty required field"});
      continue;
    }
    std::istringstream ds(dmos);
    if (!(ds >> row.dmos) || !ds.eof() || !std::isfinite(row.dmos)) {
      manifest.skipped.push_back({lineno, ErrorCode::ParseError, "dmos '" + dmos + "' is not a number"});
      continue;
    }
    row.reference = resolve(row.reference);
    row.distorted = resolve(row.distorted);
    if (check_paths) {
      std::error_code ec;
      const char* missing = !std::filesystem::is_regular_file(row.reference, ec)   ? "reference"
                            : !std::filesystem::is_regular_file(row.distorted, ec) ? "distorted"
                                                                                   : nullptr;
      if (missing) {
        manifest.skipped.push_back({lineno, ErrorCode::UnreadablePath,
                                    std::string(missing) + " image not found: " +
                                        (missing[0] == 'r' ? row.reference : row.distorted)});
        continue;
      }
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::string& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path);
  return parse_manifest(in, std::filesystem::path(path).parent_path(), check_paths);
}

std::vector<Fold> kfold_split(std::span<const std::string> groups, int k, std::uint64_t seed, SplitMode mode) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");

  // Group keys in sorted order, so fold assignment ignores row order.
  std::vector<std::string> keys;
  if (mode == SplitMode::ByReference) {
    keys.assign(groups.begin(), groups.end());
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  } else {
    keys.resize(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) keys[i] = std::to_string(i);
  }
  if (keys.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::TooFewGroups, std::to_string(keys.size()) + " groups for " + std::to_string(k) + " folds");
  }

  std::vector<std::size_t> perm(keys.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t state = splitmix64(seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    state = splitmix64(state);
    std::swap(perm[i - 1], perm[state % i]);
  }
  std::map<std::string, int> fold_of;
  for (std::size_t pos = 0; pos < perm.size(); ++pos) fold_of[keys[perm[pos]]] = static_cast<int>(pos % k);

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const int f = fold_of.at(mode == SplitMode::ByReference ? groups[i] : std::to_string(i));
    for (int j = 0; j < k; ++j) (j == f ? folds[j].test : folds[j].train).push_back(i);
  }
  return folds;
}

std::vector<Fold> kfold_split(const DatasetManifest& manifest, int k, std::uint64_t seed, SplitMode mode) {
  std::vector<std::string> groups;
  groups.reserve(manifest.rows.size());
  for (const auto& r : manifest.rows) groups.push_back(r.ref_id);
  return kfold_split(groups, k, seed, mode);
}

}  // namespace cd2::evaluation
