/*
 * Copyright 2026 The TwinScope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// CART random forest for the binary risk label.
//
// Each tree is grown on a bootstrap resample drawn from its own stream
// (seed mixed with the tree index), so trees can be trained in any order or
// in parallel and the forest is still a pure function of (data, config).
// Splits minimise weighted Gini impurity over a random subset of features;
// candidate thresholds are midpoints between consecutive distinct values.
// Ties go to the lowest feature index, then the lowest threshold.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/random.hpp"

namespace twinscope {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  int min_samples_leaf = 5;
  int features_per_split = 3;  // floor(sqrt(10))
  std::uint64_t seed = 0;

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

inline void Validate(const ForestConfig& cfg) {
  if (cfg.n_trees < 1) throw Error(ErrorKind::kValidation, "n_trees must be >= 1", "n_trees");
  if (cfg.max_depth < 1) {
    throw Error(ErrorKind::kValidation, "max_depth must be >= 1", "max_depth");
  }
  if (cfg.min_samples_leaf < 1) {
    throw Error(ErrorKind::kValidation, "min_samples_leaf must be >= 1", "min_samples_leaf");
  }
  if (cfg.features_per_split < 1 ||
      cfg.features_per_split > static_cast<int>(kNumFeatures)) {
    throw Error(ErrorKind::kValidation, "features_per_split must be in [1, 10]",
                "features_per_split");
  }
}

// Internal nodes send x[feature] <= threshold to `left`. Leaves have
// feature == -1 and carry class proportions.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p_negative = 0.0;
  double p_positive = 0.0;

  bool IsLeaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& LeafFor(const PatientFeatures& p) const {
    std::size_t i = 0;
    while (!nodes[i].IsLeaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(p.values[static_cast<std::size_t>(n.feature)] <= n.threshold
                                       ? n.left
                                       : n.right);
    }
    return nodes[i];
  }

  double PredictPositive(const PatientFeatures& p) const { return LeafFor(p).p_positive; }

  int Depth() const {
    if (nodes.empty()) return 0;
    int deepest = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
      const auto [i, d] = stack.back();
      stack.pop_back();
      deepest = std::max(deepest, d);
      const auto& n = nodes[static_cast<std::size_t>(i)];
      if (!n.IsLeaf()) {
        stack.emplace_back(n.left, d + 1);
        stack.emplace_back(n.right, d + 1);
      }
    }
    return deepest;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  FeatureStats training_stats{};

  // Mean over trees of the leaf's positive-class proportion.
  double PredictProba(const PatientFeatures& p) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.PredictPositive(p);
    return sum / static_cast<double>(trees.size());
  }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

// Row-major training matrix shared by all trees.
struct TrainingView {
  std::vector<PatientFeatures> x;
  std::vector<int> y;

  static TrainingView From(const Dataset& ds) {
    TrainingView v;
    v.x.reserve(ds.size());
    v.y.reserve(ds.size());
    for (const auto& r : ds.records) {
      v.x.push_back(r.features);
      v.y.push_back(r.risk);
    }
    return v;
  }
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  // Weighted child Gini: (n_l * gini_l + n_r * gini_r) / n.
  double impurity = 0.0;
};

// Gini of a node with `pos` positives among `n`, times n.
inline double ScaledGini(double pos, double n) {
  return n > 0.0 ? 2.0 * pos * (n - pos) / n : 0.0;
}

inline double NodeGini(const TrainingView& data, std::span<const std::size_t> rows) {
  double pos = 0.0;
  for (auto r : rows) pos += data.y[r];
  const double n = static_cast<double>(rows.size());
  return ScaledGini(pos, n) / n;
}

// Best split of `rows` over `features` with both children holding at least
// `min_samples_leaf` rows. Returns nullopt when no admissible split strictly
// lowers the node's impurity.
inline std::optional<SplitCandidate> FindBestSplit(const TrainingView& data,
                                                   std::span<const std::size_t> rows,
                                                   std::span<const int> features,
                                                   int min_samples_leaf) {
  constexpr double kTieTolerance = 1e-12;
  const std::size_t n = rows.size();
  const auto min_leaf = static_cast<std::size_t>(min_samples_leaf);
  if (n < 2 * min_leaf || n < 2) return std::nullopt;

  std::vector<int> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());

  double total_pos = 0.0;
  for (auto r : rows) total_pos += data.y[r];
  const double nd = static_cast<double>(n);
  const double parent = ScaledGini(total_pos, nd) / nd;

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, int>> column(n);
  for (int f : order) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = {data.x[rows[i]].values[static_cast<std::size_t>(f)], data.y[rows[i]]};
    }
    std::sort(column.begin(), column.end());
    double left_pos = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_pos += column[i].second;
      const std::size_t n_left = i + 1;
      if (column[i].first == column[i + 1].first) continue;
      if (n_left < min_leaf || n - n_left < min_leaf) continue;
      const double nl = static_cast<double>(n_left);
      const double impurity =
          (ScaledGini(left_pos, nl) + ScaledGini(total_pos - left_pos, nd - nl)) / nd;
      if (!best || impurity < best->impurity - kTieTolerance) {
        double threshold = 0.5 * (column[i].first + column[i + 1].first);
        if (!(threshold < column[i + 1].first)) threshold = column[i].first;
        best = SplitCandidate{f, threshold, impurity};
      }
    }
  }
  if (!best || !(best->impurity < parent - kTieTolerance)) return std::nullopt;
  return best;
}

// Reported for every node where a split search ran.
struct SplitEvent {
  std::size_t tree_index = 0;
  int depth = 0;
  const TrainingView* data = nullptr;
  std::span<const std::size_t> rows;
  std::span<const int> features;
  std::optional<SplitCandidate> chosen;
};

struct TrainOptions {
  unsigned threads = 1;
  // Must be thread-safe when threads > 1.
  std::function<void(const SplitEvent&)> observer;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& data, const ForestConfig& cfg, std::size_t tree_index,
              const TrainOptions& opts)
      : data_(data),
        cfg_(cfg),
        tree_index_(tree_index),
        opts_(opts),
        rng_(MixSeed(cfg.seed, tree_index)) {}

  DecisionTree Build() {
    const std::size_t n = data_.y.size();
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng_.UniformIndex(n);
    DecisionTree tree;
    tree.nodes.emplace_back();
    Grow(tree, 0, rows, 0);
    return tree;
  }

 private:
  void MakeLeaf(TreeNode& node, std::span<const std::size_t> rows) {
    double pos = 0.0;
    for (auto r : rows) pos += data_.y[r];
    const double n = static_cast<double>(rows.size());
    node.feature = -1;
    node.p_positive = pos / n;
    node.p_negative = (n - pos) / n;
  }

  std::vector<int> SampleFeatures() {
    std::array<int, kNumFeatures> all{};
    std::iota(all.begin(), all.end(), 0);
    const auto k = static_cast<std::size_t>(cfg_.features_per_split);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng_.UniformIndex(kNumFeatures - i);
      std::swap(all[i], all[j]);
    }
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k)};
  }

  void Grow(DecisionTree& tree, std::size_t node_index, std::vector<std::size_t>& rows,
            int depth) {
    double pos = 0.0;
    for (auto r : rows) pos += data_.y[r];
    const bool pure = pos == 0.0 || pos == static_cast<double>(rows.size());
    if (pure || depth >= cfg_.max_depth ||
        rows.size() < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf)) {
      MakeLeaf(tree.nodes[node_index], rows);
      return;
    }
    const auto features = SampleFeatures();
    const auto split = FindBestSplit(data_, rows, features, cfg_.min_samples_leaf);
    if (opts_.observer) {
      opts_.observer(SplitEvent{tree_index_, depth, &data_, rows, features, split});
    }
    if (!split) {
      MakeLeaf(tree.nodes[node_index], rows);
      return;
    }
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto r : rows) {
      const double v = data_.x[r].values[static_cast<std::size_t>(split->feature)];
      (v <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto right = tree.nodes.size();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[node_index];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = static_cast<int>(left);
    node.right = static_cast<int>(right);
    rows.clear();
    rows.shrink_to_fit();
    Grow(tree, left, left_rows, depth + 1);
    Grow(tree, right, right_rows, depth + 1);
  }

  const TrainingView& data_;
  const ForestConfig& cfg_;
  std::size_t tree_index_;
  const TrainOptions& opts_;
  Rng rng_;
};

inline void RequireTrainable(const Dataset& train) {
  if (train.empty()) throw Error(ErrorKind::kValidation, "training set is empty");
  const auto pos = train.CountPositive();
  if (pos == 0 || pos == train.size()) {
    throw Error(ErrorKind::kValidation, "training data contains a single class");
  }
  for (const auto& r : train.records) RequireComplete(r.features);
}

}  // namespace detail

inline ForestModel TrainForest(const Dataset& train, const ForestConfig& cfg,
                               const TrainOptions& opts = {}) {
  Validate(cfg);
  detail::RequireTrainable(train);
  const auto data = TrainingView::From(train);

  ForestModel model;
  model.config = cfg;
  model.training_stats = train.stats;
  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));

  auto build = [&](std::size_t t) {
    model.trees[t] = detail::TreeBuilder(data, cfg, t, opts).Build();
  };
  const unsigned threads =
      std::min<unsigned>(std::max(1u, opts.threads), static_cast<unsigned>(cfg.n_trees));
  if (threads == 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) build(t);
    return model;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t t = next++; t < model.trees.size(); t = next++) build(t);
      });
    }
  }
  return model;
}

}  // namespace twinscope
