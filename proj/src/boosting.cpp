#include "cd2/boosting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cd2/error.hpp"

namespace cd2::boosting {

namespace {

constexpr std::size_t kFeatures = DistanceVector::kSize;
constexpr std::string_view kModelMagic = "cd2b-model";
constexpr int kModelVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Features considered by one round, ascending. Depends on (seed, round) only.
std::vector<int> feature_subset(std::uint64_t seed, int round, double fraction) {
  std::vector<int> all(kFeatures);
  std::iota(all.begin(), all.end(), 0);
  const auto k = static_cast<std::size_t>(
      std::clamp<double>(std::ceil(fraction * kFeatures - 1e-9), 1.0, static_cast<double>(kFeatures)));
  if (k == kFeatures) return all;
  std::uint64_t state = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(round) + 1));
  for (std::size_t i = 0; i < k; ++i) {
    state = splitmix64(state);
    const std::size_t j = i + static_cast<std::size_t>(state % (kFeatures - i));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

struct TreeBuilder {
  const std::vector<DistanceVector>& x;
  const std::vector<double>& residual;
  const std::vector<int>& features;
  const TrainConfig& cfg;
  RegressionTree tree;

  double mean_of(const std::vector<std::size_t>& idx) const {
    double s = 0.0;
    for (auto i : idx) s += residual[i];
    return s / static_cast<double>(idx.size());
  }

  int build(std::vector<std::size_t> idx, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].value = mean_of(idx);

    const std::size_t n = idx.size();
    const auto min_leaf = static_cast<std::size_t>(cfg.min_samples_leaf);
    if (depth >= cfg.max_depth || n < 2 * min_leaf) return id;

    double total = 0.0;
    for (auto i : idx) total += residual[i];
    const double parent = total * total / static_cast<double>(n);

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = idx;
    for (int f : features) {
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
      double left = 0.0;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        left += residual[sorted[pos]];
        const std::size_t nl = pos + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double a = x[sorted[pos]][f];
        const double b = x[sorted[pos + 1]][f];
        if (!(a < b)) continue;
        const double right = total - left;
        const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = a + (b - a) / 2.0;
          if (!(best_threshold < b)) best_threshold = a;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lhs;
    std::vector<std::size_t> rhs;
    for (auto i : idx) (x[i][best_feature] <= best_threshold ? lhs : rhs).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    const int l = build(std::move(lhs), depth + 1);
    const int r = build(std::move(rhs), depth + 1);
    auto& node = tree.nodes[id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

double mse(const std::vector<double>& y, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace

double RegressionTree::evaluate(const DistanceVector& d) const {
  int at = 0;
  while (nodes[at].feature >= 0) {
    const auto& n = nodes[at];
    at = d[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[at].value;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[at].feature >= 0) {
      stack.push_back({nodes[at].left, d + 1});
      stack.push_back({nodes[at].right, d + 1});
    }
  }
  return deepest;
}

void TrainConfig::validate() const {
  if (trees < 1) throw Error(ErrorCode::ConfigError, "need at least one tree");
  if (max_depth < 1) throw Error(ErrorCode::ConfigError, "max depth must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "learning rate must be in (0,1]");
  }
  if (min_samples_leaf < 1) throw Error(ErrorCode::ConfigError, "min samples per leaf must be positive");
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "feature fraction must be in (0,1]");
  }
}

BoostedModel train(std::span<const DistanceVector> X, std::span<const double> y, const TrainConfig& cfg,
                   std::vector<double>* loss_history) {
  cfg.validate();
  if (X.empty()) throw Error(ErrorCode::EmptyDataset, "no training rows");
  if (X.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(X.size()) + " feature rows vs " + std::to_string(y.size()) + " targets");
  }
  if (X.size() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
    throw Error(ErrorCode::InvalidArgument, "need at least 2 * min_samples_leaf rows");
  }

  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (X[a].values != X[b].values) return X[a].values < X[b].values;
    return y[a] < y[b];
  });
  std::vector<DistanceVector> xs(X.size());
  std::vector<double> ys(X.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    xs[i] = X[order[i]];
    ys[i] = y[order[i]];
  }

  BoostedModel model;
  model.base = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  std::vector<double> fitted(ys.size(), model.base);
  if (loss_history) loss_history->assign(1, mse(ys, fitted));

  if (std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys.front(); })) {
    model.base = ys.front();
    model.degenerate_targets = true;
    return model;
  }

  std::vector<double> residual(ys.size());
  std::vector<std::size_t> all(ys.size());
  std::iota(all.begin(), all.end(), 0);
  for (int round = 0; round < cfg.trees; ++round) {
    for (std::size_t i = 0; i < ys.size(); ++i) residual[i] = ys[i] - fitted[i];
    const auto features = feature_subset(cfg.seed, round, cfg.feature_fraction);
    TreeBuilder builder{xs, residual, features, cfg, {}};
    builder.build(all, 0);
    for (std::size_t i = 0; i < ys.size(); ++i) fitted[i] += cfg.learning_rate * builder.tree.evaluate(xs[i]);
    model.trees.push_back(std::move(builder.tree));
    model.shrinkage.push_back(cfg.learning_rate);
    if (loss_history) loss_history->push_back(mse(ys, fitted));
  }
  return model;
}

double predict(const BoostedModel& model, const DistanceVector& d) {
  if (model.contract != distances::kDistanceVectorContract) {
    throw Error(ErrorCode::FeatureOrderMismatch, "model expects feature order '" + model.contract + "', have '" +
                                                     std::string(distances::kDistanceVectorContract) + "'");
  }
  double f = model.base;
  for (std::size_t i = 0; i < model.trees.size(); ++i) f += model.shrinkage[i] * model.trees[i].evaluate(d);
  return f;
}

std::vector<double> predict(const BoostedModel& model, std::span<const DistanceVector> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(predict(model, r));
  return out;
}

namespace {

std::string hex(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

class Tokens {
 public:
  explicit Tokens(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error(ErrorCode::ParseError, "unexpected end of model file");
    return w;
  }
  void expect(std::string_view keyword) {
    const std::string w = word();
    if (w != keyword) {
      throw Error(ErrorCode::ParseError, "expected '" + std::string(keyword) + "', found '" + w + "'");
    }
  }
  long integer() {
    const std::string w = word();
    long v = 0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc{} || res.ptr != w.data() + w.size()) {
      throw Error(ErrorCode::ParseError, "bad integer '" + w + "'");
    }
    return v;
  }
  double real() {
    const std::string w = word();
    double v = 0.0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v, std::chars_format::hex);
    if (res.ec != std::errc{} || res.ptr != w.data() + w.size()) {
      throw Error(ErrorCode::ParseError, "bad hex float '" + w + "'");
    }
    return v;
  }
  bool at_end() {
    std::string w;
    return !(in_ >> w);
  }

 private:
  std::istringstream in_;
};

}  // namespace

std::string save_model(const BoostedModel& model) {
  std::ostringstream out;
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "contract " << model.contract << '\n';
  out << "features " << kFeatures << '\n';
  out << "base " << hex(model.base) << '\n';
  out << "degenerate " << (model.degenerate_targets ? 1 : 0) << '\n';
  out << "trees " << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& tree = model.trees[t];
    out << "tree " << hex(model.shrinkage[t]) << ' ' << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
      if (n.feature < 0) {
        out << "leaf " << hex(n.value) << '\n';
      } else {
        out << "split " << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
            << hex(n.value) << '\n';
      }
    }
  }
  out << "end\n";
  return out.str();
}

BoostedModel load_model(const std::string& text) {
  Tokens tok(text);
  tok.expect(kModelMagic);
  const long version = tok.integer();
  if (version != kModelVersion) {
    throw Error(ErrorCode::VersionMismatch, "model version " + std::to_string(version));
  }
  BoostedModel model;
  tok.expect("contract");
  model.contract = tok.word();
  tok.expect("features");
  if (tok.integer() != static_cast<long>(kFeatures)) {
    throw Error(ErrorCode::FeatureOrderMismatch, "model was trained on a different feature count");
  }
  tok.expect("base");
  model.base = tok.real();
  tok.expect("degenerate");
  model.degenerate_targets = tok.integer() != 0;
  tok.expect("trees");
  const long trees = tok.integer();
  if (trees < 0) throw Error(ErrorCode::ParseError, "negative tree count");
  for (long t = 0; t < trees; ++t) {
    tok.expect("tree");
    const double gamma = tok.real();
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::ParseError, "shrinkage outside (0,1]");
    const long count = tok.integer();
    if (count < 1) throw Error(ErrorCode::ParseError, "tree without nodes");
    RegressionTree tree;
    for (long i = 0; i < count; ++i) {
      RegressionTree::Node n;
      const std::string kind = tok.word();
      if (kind == "leaf") {
        n.value = tok.real();
      } else if (kind == "split") {
        n.feature = static_cast<int>(tok.integer());
        n.threshold = tok.real();
        n.left = static_cast<int>(tok.integer());
        n.right = static_cast<int>(tok.integer());
        n.value = tok.real();
        if (n.feature < 0 || n.feature >= static_cast<int>(kFeatures)) {
          throw Error(ErrorCode::ParseError, "split feature out of range");
        }
        // Children always follow their parent, which also rules out cycles.
        if (n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
          throw Error(ErrorCode::ParseError, "split child index out of range");
        }
      } else {
        throw Error(ErrorCode::ParseError, "unknown node kind '" + kind + "'");
      }
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
    model.shrinkage.push_back(gamma);
  }
  tok.expect("end");
  if (!tok.at_end()) throw Error(ErrorCode::ParseError, "content after 'end'");
  return model;
}

void save_model_file(const BoostedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << save_model(model);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

BoostedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace cd2::boosting
