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

// Model files.
//
// A model file is a single JSON document:
//
//   {
//     "format": "twinscope-model",
//     "version": 1,
//     "kind": "random_forest" | "logistic_regression",
//     "features": [ "age", ... ],          // column order, checked on load
//     "training_stats": [ {feature, count, mean, std, min, max, q1,
//                          median, q3}, ... ],
//     "config": { ... },                  // ForestConfig or LogisticConfig
//     "trees": [ {feature: [...], threshold: [...], left: [...],
//                 right: [...], p_negative: [...], p_positive: [...]} ]
//                                          // forests: node arrays per tree
//     "weights": [...], "mean": [...], "std": [...]   // logistic
//   }
//
// Doubles are written in shortest round-trip form, so Save followed by
// Load reproduces every value bit for bit.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <variant>

#include "json.hpp"
#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/forest.hpp"
#include "twinscope/logistic.hpp"
#include "twinscope/random.hpp"

namespace twinscope {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json StatsToJson(const FeatureStats& stats) {
  json out = json::array();
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const auto& s = stats[j];
    out.push_back({{"feature", kFeatureNames[j]},
                   {"count", s.count},
                   {"mean", s.mean},
                   {"std", s.std},
                   {"min", s.min},
                   {"max", s.max},
                   {"q1", s.q1},
                   {"median", s.median},
                   {"q3", s.q3}});
  }
  return out;
}

inline FeatureStats StatsFromJson(const json& in) {
  if (!in.is_array() || in.size() != kNumFeatures) {
    throw Error(ErrorKind::kParse, "model file: training_stats must list 10 features");
  }
  FeatureStats stats{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const auto& e = in[j];
    if (e.at("feature").get<std::string>() != kFeatureNames[j]) {
      throw Error(ErrorKind::kParse, "model file: training_stats out of column order");
    }
    auto& s = stats[j];
    s.count = e.at("count").get<std::size_t>();
    s.mean = e.at("mean").get<double>();
    s.std = e.at("std").get<double>();
    s.min = e.at("min").get<double>();
    s.max = e.at("max").get<double>();
    s.q1 = e.at("q1").get<double>();
    s.median = e.at("median").get<double>();
    s.q3 = e.at("q3").get<double>();
  }
  return stats;
}

inline json TreeToJson(const DecisionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), p_neg = json::array(), p_pos = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    p_neg.push_back(n.p_negative);
    p_pos.push_back(n.p_positive);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"p_negative", p_neg},   {"p_positive", p_pos}};
}

inline DecisionTree TreeFromJson(const json& in) {
  const auto& feature = in.at("feature");
  const std::size_t n = feature.size();
  for (const char* key : {"threshold", "left", "right", "p_negative", "p_positive"}) {
    if (in.at(key).size() != n) {
      throw Error(ErrorKind::kParse, std::string("model file: tree array '") + key +
                                         "' has inconsistent length");
    }
  }
  if (n == 0) throw Error(ErrorKind::kParse, "model file: empty tree");
  DecisionTree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = tree.nodes[i];
    node.feature = feature[i].get<int>();
    node.threshold = in["threshold"][i].get<double>();
    node.left = in["left"][i].get<int>();
    node.right = in["right"][i].get<int>();
    node.p_negative = in["p_negative"][i].get<double>();
    node.p_positive = in["p_positive"][i].get<double>();
    if (!node.IsLeaf()) {
      const auto in_range = [&](int c) {
        return c > static_cast<int>(i) && c < static_cast<int>(n);
      };
      if (node.feature >= static_cast<int>(kNumFeatures) || !in_range(node.left) ||
          !in_range(node.right)) {
        throw Error(ErrorKind::kParse, "model file: malformed tree node " + std::to_string(i));
      }
    }
  }
  return tree;
}

inline json Header(std::string_view kind, const FeatureStats& stats) {
  json features = json::array();
  for (auto name : kFeatureNames) features.push_back(name);
  return {{"format", "twinscope-model"},
          {"version", kModelFormatVersion},
          {"kind", kind},
          {"features", features},
          {"training_stats", StatsToJson(stats)}};
}

}  // namespace detail

inline nlohmann::json ToJson(const ForestConfig& cfg) {
  return {{"n_trees", cfg.n_trees},
          {"max_depth", cfg.max_depth},
          {"min_samples_leaf", cfg.min_samples_leaf},
          {"features_per_split", cfg.features_per_split},
          {"seed", cfg.seed}};
}

inline nlohmann::json ToJson(const LogisticConfig& cfg) {
  return {{"l2", cfg.l2}, {"iters", cfg.iters}, {"lr", cfg.lr}};
}

inline nlohmann::json ToJson(const ForestModel& m) {
  auto doc = detail::Header("random_forest", m.training_stats);
  doc["config"] = ToJson(m.config);
  auto trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(detail::TreeToJson(t));
  doc["trees"] = std::move(trees);
  return doc;
}

inline nlohmann::json ToJson(const LogisticModel& m) {
  auto doc = detail::Header("logistic_regression", m.training_stats);
  doc["config"] = ToJson(m.config);
  doc["weights"] = m.weights;
  doc["mean"] = m.standardization.mean;
  doc["std"] = m.standardization.std;
  return doc;
}

// A trained model of either kind.
class AnyModel {
 public:
  AnyModel() = default;
  explicit AnyModel(ForestModel m) : model_(std::move(m)) {}
  explicit AnyModel(LogisticModel m) : model_(std::move(m)) {}

  double PredictProba(const PatientFeatures& p) const {
    return std::visit([&](const auto& m) { return m.PredictProba(p); }, model_);
  }

  const FeatureStats& training_stats() const {
    return std::visit([](const auto& m) -> const FeatureStats& { return m.training_stats; },
                      model_);
  }

  std::string_view kind() const {
    return std::holds_alternative<ForestModel>(model_) ? "random_forest"
                                                       : "logistic_regression";
  }

  const ForestModel* forest() const { return std::get_if<ForestModel>(&model_); }
  const LogisticModel* logistic() const { return std::get_if<LogisticModel>(&model_); }

  nlohmann::json ToJson() const {
    return std::visit([](const auto& m) { return twinscope::ToJson(m); }, model_);
  }

 private:
  std::variant<ForestModel, LogisticModel> model_;
};

inline AnyModel ModelFromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "twinscope-model") {
      throw Error(ErrorKind::kParse, "not a twinscope model file");
    }
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::kParse, "unsupported model file version");
    }
    const auto& features = doc.at("features");
    if (features.size() != kNumFeatures) {
      throw Error(ErrorKind::kParse, "model file: feature list mismatch");
    }
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      if (features[j].get<std::string>() != kFeatureNames[j]) {
        throw Error(ErrorKind::kParse, "model file: feature list mismatch");
      }
    }
    const auto stats = detail::StatsFromJson(doc.at("training_stats"));
    const auto kind = doc.at("kind").get<std::string>();
    const auto& cfg = doc.at("config");
    if (kind == "random_forest") {
      ForestModel m;
      m.training_stats = stats;
      m.config.n_trees = cfg.at("n_trees").get<int>();
      m.config.max_depth = cfg.at("max_depth").get<int>();
      m.config.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
      m.config.features_per_split = cfg.at("features_per_split").get<int>();
      m.config.seed = cfg.at("seed").get<std::uint64_t>();
      for (const auto& t : doc.at("trees")) m.trees.push_back(detail::TreeFromJson(t));
      if (m.trees.size() != static_cast<std::size_t>(m.config.n_trees)) {
        throw Error(ErrorKind::kParse, "model file: tree count does not match config");
      }
      return AnyModel(std::move(m));
    }
    if (kind == "logistic_regression") {
      LogisticModel m;
      m.training_stats = stats;
      m.config.l2 = cfg.at("l2").get<double>();
      m.config.iters = cfg.at("iters").get<int>();
      m.config.lr = cfg.at("lr").get<double>();
      m.weights = doc.at("weights").get<LogisticWeights>();
      m.standardization.mean = doc.at("mean").get<std::array<double, kNumFeatures>>();
      m.standardization.std = doc.at("std").get<std::array<double, kNumFeatures>>();
      return AnyModel(std::move(m));
    }
    throw Error(ErrorKind::kParse, "model file: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("model file: ") + e.what());
  }
}

inline std::string SerializeModel(const AnyModel& m) { return m.ToJson().dump() + "\n"; }

// Stable identifier of a serialized model: a hash of its exact bytes.
inline std::string ModelVersion(std::string_view serialized) {
  std::ostringstream os;
  os << "m-" << std::hex << std::setw(16) << std::setfill('0') << Fnv1a64(serialized);
  return os.str();
}

struct LoadedModel {
  AnyModel model;
  std::string version;
};

inline LoadedModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open model file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, "model file " + path + ": " + e.what());
  }
  return {ModelFromJson(doc), ModelVersion(text)};
}

inline void SaveModel(const std::string& path, const AnyModel& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write model file " + path);
  out << SerializeModel(m);
  if (!out) throw Error(ErrorKind::kIo, "failed writing model file " + path);
}

}  // namespace twinscope
