#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cd2/distances.hpp"

namespace cd2::boosting {

using distances::DistanceVector;

/// Flat binary tree. A node with feature < 0 is a leaf; otherwise samples
/// with x[feature] <= threshold go left.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };
  std::vector<Node> nodes;

  double evaluate(const DistanceVector& d) const;
  int depth() const;
};

struct BoostedModel {
  double base = 0.0;
  std::vector<RegressionTree> trees;
  std::vector<double> shrinkage;
  std::string contract{distances::kDistanceVectorContract};
  /// Set when training saw zero target variance; the model is the base only.
  bool degenerate_targets = false;
};

struct TrainConfig {
  int trees = 200;
  int max_depth = 4;
  double learning_rate = 0.05;
  int min_samples_leaf = 5;
  double feature_fraction = 0.8;
  std::uint64_t seed = 0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Least-squares gradient boosting. Rows are put into a canonical order
/// first, and each round's feature subset depends only on (seed, round), so
/// the result does not depend on the input row order.
///
/// Throws EmptyDataset for no rows, LengthMismatch when |X| != |y|, and
/// InvalidArgument when there are fewer than 2 * min_samples_leaf rows.
/// `loss_history`, when given, receives the training MSE before the first
/// round and after every round.
BoostedModel train(std::span<const DistanceVector> X, std::span<const double> y, const TrainConfig& cfg,
                   std::vector<double>* loss_history = nullptr);

/// base + sum(gamma_i * tree_i(d)). Throws FeatureOrderMismatch when the
/// model was trained against another distance ordering.
double predict(const BoostedModel& model, const DistanceVector& d);
std::vector<double> predict(const BoostedModel& model, std::span<const DistanceVector> rows);

/// Textual, versioned, exact (hex floats).
std::string save_model(const BoostedModel& model);
/// Throws ParseError or VersionMismatch.
BoostedModel load_model(const std::string& text);

void save_model_file(const BoostedModel& model, const std::string& path);
BoostedModel load_model_file(const std::string& path);

}  // namespace cd2::boosting
