#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cd2/boosting.hpp"
#include "cd2/error.hpp"
#include "cd2/evaluation.hpp"

namespace cd2 {
namespace {

using namespace boosting;

struct Data {
  std::vector<DistanceVector> X;
  std::vector<double> y;
};

Data random_features(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d;
  d.X.resize(static_cast<std::size_t>(n));
  for (auto& row : d.X)
    for (auto& v : row.values) v = u(rng);
  return d;
}

Data linear_target(int n, std::uint64_t seed) {
  auto d = random_features(n, seed);
  std::mt19937_64 rng(seed + 1000);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (const auto& row : d.X) d.y.push_back(2 * row[0] - row[6] + noise(rng));
  return d;
}

double train_rmse(const BoostedModel& m, const Data& d) {
  double s = 0;
  for (std::size_t i = 0; i < d.X.size(); ++i) s += std::pow(predict(m, d.X[i]) - d.y[i], 2);
  return std::sqrt(s / static_cast<double>(d.X.size()));
}

double stddev(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

TEST(Train, ConstantTargets) {
  auto d = random_features(40, 1);
  d.y.assign(40, 3.25);
  const auto m = train(d.X, d.y, {});
  EXPECT_TRUE(m.degenerate_targets);
  EXPECT_TRUE(m.trees.empty());
  EXPECT_DOUBLE_EQ(predict(m, d.X[7]), 3.25);
}

TEST(Train, CopyOfFirstFeature) {
  auto d = random_features(200, 2);
  for (const auto& row : d.X) d.y.push_back(row[0]);
  TrainConfig cfg;
  cfg.trees = 100;
  cfg.learning_rate = 0.1;
  cfg.feature_fraction = 1.0;
  const auto m = train(d.X, d.y, cfg);
  EXPECT_LT(train_rmse(m, d), 0.05 * stddev(d.y));
}

TEST(Train, LossNonIncreasingAndTreesRespectDepth) {
  const auto d = linear_target(300, 3);
  TrainConfig cfg;
  cfg.trees = 60;
  cfg.max_depth = 3;
  std::vector<double> loss;
  const auto m = train(d.X, d.y, cfg, &loss);
  ASSERT_EQ(loss.size(), 61u);
  for (std::size_t i = 1; i < loss.size(); ++i) EXPECT_LE(loss[i], loss[i - 1] + 1e-12) << i;
  EXPECT_LT(loss.back(), loss.front());
  for (const auto& t : m.trees) EXPECT_LE(t.depth(), 3);
}

TEST(Train, MinLeafRespected) {
  const auto d = linear_target(100, 4);
  TrainConfig cfg;
  cfg.trees = 10;
  cfg.min_samples_leaf = 20;
  const auto m = train(d.X, d.y, cfg);
  for (const auto& t : m.trees) {
    std::vector<int> hits(t.nodes.size(), 0);
    for (const auto& row : d.X) {
      int n = 0;
      while (t.nodes[n].feature >= 0) n = row[t.nodes[n].feature] <= t.nodes[n].threshold ? t.nodes[n].left : t.nodes[n].right;
      ++hits[n];
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
      if (t.nodes[i].feature < 0) EXPECT_GE(hits[i], 20);
  }
}

TEST(Train, StumpRecoversStep) {
  auto d = random_features(100, 5);
  for (const auto& row : d.X) d.y.push_back(row[3] <= 0.5 ? 0.0 : 1.0);
  TrainConfig cfg;
  cfg.trees = 1;
  cfg.max_depth = 1;
  cfg.learning_rate = 1.0;
  cfg.feature_fraction = 1.0;
  cfg.min_samples_leaf = 1;
  const auto m = train(d.X, d.y, cfg);
  ASSERT_EQ(m.trees.size(), 1u);
  const auto& root = m.trees[0].nodes[0];
  EXPECT_EQ(root.feature, 3);
  EXPECT_NEAR(root.threshold, 0.5, 0.05);
  EXPECT_NEAR(train_rmse(m, d), 0.0, 1e-12);
}

TEST(Train, Errors) {
  const auto d = linear_target(20, 6);
  auto code = [](const auto& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code([&] { train({}, {}, {}); }), ErrorCode::EmptyDataset);
  EXPECT_EQ(code([&] { train(d.X, std::span(d.y).first(19), {}); }), ErrorCode::LengthMismatch);
  TrainConfig bad;
  bad.learning_rate = 0;
  EXPECT_EQ(code([&] { train(d.X, d.y, bad); }), ErrorCode::ConfigError);
  bad = {};
  bad.feature_fraction = 1.5;
  EXPECT_EQ(code([&] { bad.validate(); }), ErrorCode::ConfigError);
}

TEST(Train, DeterministicAndRowOrderInvariant) {
  const auto d = linear_target(150, 7);
  TrainConfig cfg;
  cfg.trees = 30;
  cfg.seed = 99;
  const auto a = save_model(train(d.X, d.y, cfg));
  EXPECT_EQ(a, save_model(train(d.X, d.y, cfg)));

  std::vector<std::size_t> perm(d.X.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
  Data p;
  for (auto i : perm) {
    p.X.push_back(d.X[i]);
    p.y.push_back(d.y[i]);
  }
  EXPECT_EQ(a, save_model(train(p.X, p.y, cfg)));
  cfg.seed = 100;
  EXPECT_NE(a, save_model(train(d.X, d.y, cfg)));
}

TEST(Train, HeldOutRanking) {
  const auto d = linear_target(500, 8);
  const auto test = linear_target(200, 9);
  TrainConfig cfg;
  const auto m = train(d.X, d.y, cfg);
  EXPECT_LT(train_rmse(m, d), 0.05);
  EXPECT_GT(evaluation::srocc(predict(m, test.X), test.y), 0.98);
}

TEST(Predict, HandArithmetic) {
  BoostedModel m;
  m.base = 1.5;
  DistanceVector d;
  EXPECT_DOUBLE_EQ(predict(m, d), 1.5);
  RegressionTree leaf;
  leaf.nodes.push_back({-1, 0.0, 2.0, -1, -1});
  m.trees.push_back(leaf);
  m.shrinkage.push_back(0.1);
  EXPECT_DOUBLE_EQ(predict(m, d), 1.5 + 0.1 * 2.0);

  RegressionTree split;
  split.nodes = {{2, 0.5, 0, 1, 2}, {-1, 0, -1.0, -1, -1}, {-1, 0, 4.0, -1, -1}};
  m.trees.push_back(split);
  m.shrinkage.push_back(0.5);
  d[2] = 0.5;
  EXPECT_DOUBLE_EQ(predict(m, d), 1.5 + 0.2 - 0.5);
  d[2] = 0.51;
  EXPECT_DOUBLE_EQ(predict(m, d), 1.5 + 0.2 + 2.0);
  EXPECT_EQ(split.depth(), 1);
}

TEST(Predict, ContractMismatch) {
  BoostedModel m;
  m.contract = "other";
  try {
    predict(m, DistanceVector{});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FeatureOrderMismatch);
  }
}

TEST(Serialization, RoundtripIsExact) {
  const auto d = linear_target(120, 10);
  TrainConfig cfg;
  cfg.trees = 25;
  const auto m = train(d.X, d.y, cfg);
  const auto text = save_model(m);
  const auto back = load_model(text);
  EXPECT_EQ(save_model(back), text);
  for (const auto& row : d.X) EXPECT_EQ(predict(back, row), predict(m, row));
}

TEST(Serialization, ZeroTreeModel) {
  BoostedModel m;
  m.base = -0.125;
  m.degenerate_targets = true;
  const auto back = load_model(save_model(m));
  EXPECT_TRUE(back.trees.empty());
  EXPECT_TRUE(back.degenerate_targets);
  EXPECT_EQ(back.base, -0.125);
}

TEST(Serialization, Errors) {
  const auto d = linear_target(60, 11);
  TrainConfig cfg;
  cfg.trees = 5;
  const auto text = save_model(train(d.X, d.y, cfg));
  auto code = [](const std::string& t) {
    try {
      load_model(t);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code(text.substr(0, text.size() / 2)), ErrorCode::ParseError);
  EXPECT_EQ(code(""), ErrorCode::ParseError);
  EXPECT_EQ(code("garbage\n"), ErrorCode::ParseError);
  auto v2 = text;
  v2.replace(v2.find("cd2b-model 1"), 12, "cd2b-model 2");
  EXPECT_EQ(code(v2), ErrorCode::VersionMismatch);
  EXPECT_EQ(code(text + "extra\n"), ErrorCode::ParseError);
}

}  // namespace
}  // namespace cd2
