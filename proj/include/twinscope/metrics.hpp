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

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/forest.hpp"
#include "twinscope/predictor.hpp"
#include "twinscope/random.hpp"

namespace twinscope {

struct EvalReport {
  double accuracy = 0.0;
  // confusion[actual][predicted]
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double auc = 0.5;
  std::size_t n_test = 0;
};

// Mann-Whitney AUC with tied scores counted as one half. Returns 0.5 when a
// class is absent and the statistic is undefined.
inline double RankAuc(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        n_pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return 0.5;
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

// A record is predicted positive when its probability is >= threshold.
template <Predictor M>
EvalReport EvaluateModel(const M& model, const Dataset& test, double threshold = 0.5) {
  if (test.empty()) throw Error(ErrorKind::kValidation, "test set is empty");
  EvalReport report;
  report.n_test = test.size();
  std::vector<double> scores;
  std::vector<int> labels;
  std::size_t correct = 0;
  for (const auto& r : test.records) {
    const double p = CheckedPredict(model, r.features);
    const int predicted = p >= threshold ? 1 : 0;
    ++report.confusion[static_cast<std::size_t>(r.risk)][static_cast<std::size_t>(predicted)];
    correct += predicted == r.risk ? 1 : 0;
    scores.push_back(p);
    labels.push_back(r.risk);
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n_test);
  report.auc = RankAuc(scores, labels);
  return report;
}

struct LearningCurvePoint {
  std::size_t train_size = 0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

// Trains one forest per fraction on a prefix of the shuffled training split
// and scores it on the fixed validation split. Each prefix is restored to
// file order before training, so fraction 1.0 reproduces the standalone run
// on the same split exactly.
inline std::vector<LearningCurvePoint> LearningCurve(const Dataset& raw,
                                                     const ForestConfig& cfg,
                                                     std::span<const double> fractions,
                                                     const SplitSpec& split,
                                                     const TrainOptions& opts = {}) {
  if (fractions.empty()) throw Error(ErrorKind::kValidation, "no fractions given");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0) ||
        (i > 0 && !(fractions[i] > fractions[i - 1]))) {
      throw Error(ErrorKind::kValidation,
                  "fractions must be increasing and within (0, 1]", "fractions");
    }
  }
  const auto parts = PrepareSplit(raw, split);
  const std::size_t n = parts.train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(MixSeed(split.seed, 0x6c63));
  rng.Shuffle(std::span<std::size_t>(order));

  std::vector<LearningCurvePoint> curve;
  for (double fraction : fractions) {
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (k < 10) {
      throw Error(ErrorKind::kValidation,
                  "fraction " + std::to_string(fraction) + " yields fewer than 10 records",
                  "fractions");
    }
    std::vector<std::size_t> prefix(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(prefix.begin(), prefix.end());
    std::vector<LabeledRecord> records;
    records.reserve(k);
    for (auto i : prefix) records.push_back(parts.train.records[i]);
    const auto subset = Dataset::FromRecords(std::move(records));
    const auto model = TrainForest(subset, cfg, opts);
    curve.push_back({k, EvaluateModel(model, subset).accuracy,
                     EvaluateModel(model, parts.test).accuracy});
  }
  return curve;
}

}  // namespace twinscope
