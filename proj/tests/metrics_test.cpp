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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "twinscope/ilpd_io.hpp"
#include "twinscope/metrics.hpp"
#include "twinscope/predictor.hpp"
#include "twinscope/report.hpp"

namespace ts = twinscope;

namespace {

ts::Dataset Labeled(const std::vector<int>& labels) {
  std::vector<ts::LabeledRecord> recs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ts::LabeledRecord r;
    r.features = oracle::Row0();
    r.features[ts::Feature::kAlt] = static_cast<double>(i);
    r.risk = labels[i];
    recs.push_back(r);
  }
  return ts::Dataset::FromRecords(recs);
}

ts::Dataset Fallback() {
  return ts::LoadIlpd(std::string(TWINSCOPE_SOURCE_DIR) + "/data/ilpd_fallback.csv",
                      ts::LabelPolarity::kStandard)
      .dataset;
}

// Pairwise AUC: fraction of (positive, negative) pairs ordered correctly.
double PairAuc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      good += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return good / pairs;
}

}  // namespace

TEST(Evaluate, ConstantOneOnPositives) {
  const auto r = ts::EvaluateModel(ts::MakePredictor([](const ts::PatientFeatures&) { return 1.0; }),
                                   Labeled({1, 1, 1, 1}));
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.n_test, 4u);
  EXPECT_EQ(r.confusion[1][1], 4u);
  EXPECT_EQ(r.auc, 0.5);
}

TEST(Evaluate, ConstantModelScoresPositiveFraction) {
  std::mt19937_64 gen(1);
  std::vector<int> labels(301);
  for (auto& y : labels) y = static_cast<int>(gen() % 2);
  const auto ds = Labeled(labels);
  const auto r = ts::EvaluateModel(ts::MakePredictor([](const ts::PatientFeatures&) { return 0.9; }), ds);
  EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(ds.CountPositive()) / 301.0);
  EXPECT_EQ(r.confusion[0][0] + r.confusion[0][1] + r.confusion[1][0] + r.confusion[1][1], 301u);
}

TEST(Evaluate, ThresholdIsInclusive) {
  const auto m = ts::MakePredictor([](const ts::PatientFeatures& p) { return p[ts::Feature::kAlt] / 10.0; });
  const auto r = ts::EvaluateModel(m, Labeled({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}), 0.5);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.auc, 1.0);
}

TEST(Evaluate, NonFiniteRejected) {
  const auto m = ts::MakePredictor([](const ts::PatientFeatures&) { return std::nan(""); });
  EXPECT_THROW(ts::EvaluateModel(m, Labeled({0, 1})), ts::Error);
  EXPECT_THROW(ts::EvaluateModel(m, ts::Dataset{}), ts::Error);
}

TEST(RankAuc, MatchesPairCount) {
  std::mt19937_64 gen(5);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + gen() % 60;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(gen() % 7);
      y[i] = static_cast<int>(gen() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(ts::RankAuc(s, y), PairAuc(s, y), 1e-12);
  }
}

TEST(LearningCurve, FullFractionEqualsStandaloneRun) {
  const auto raw = Fallback();
  const ts::ForestConfig cfg{.n_trees = 20, .seed = 42};
  const ts::SplitSpec spec{0.8, 42, true};
  const std::vector<double> one{1.0};
  const auto curve = ts::LearningCurve(raw, cfg, one, spec);
  const auto parts = ts::PrepareSplit(raw, spec);
  const auto model = ts::TrainForest(parts.train, cfg);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0].train_size, parts.train.size());
  EXPECT_EQ(curve[0].validation_accuracy, ts::EvaluateModel(model, parts.test).accuracy);
  EXPECT_EQ(curve[0].train_accuracy, ts::EvaluateModel(model, parts.train).accuracy);
}

TEST(LearningCurve, DeterministicIncreasingAndCsv) {
  const auto raw = Fallback();
  const ts::ForestConfig cfg{.n_trees = 10, .seed = 7};
  const std::vector<double> fr{0.2, 0.4, 0.6, 0.8, 1.0};
  const auto a = ts::LearningCurve(raw, cfg, fr, {0.8, 7, true});
  const auto b = ts::LearningCurve(raw, cfg, fr, {0.8, 7, true}, {.threads = 3, .observer = {}});
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].train_size, b[i].train_size);
    EXPECT_EQ(a[i].validation_accuracy, b[i].validation_accuracy);
    if (i > 0) {
      EXPECT_GT(a[i].train_size, a[i - 1].train_size);
    }
  }
  std::ostringstream csv;
  ts::WriteLearningCurveCsv(csv, a);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "train_size,train_accuracy,validation_accuracy");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(LearningCurve, TooSmallFractionRejected) {
  const auto raw = Fallback();
  const std::vector<double> tiny{0.01, 1.0};
  EXPECT_THROW(ts::LearningCurve(raw, {.n_trees = 2}, tiny, {0.8, 1, true}), ts::Error);
  const std::vector<double> unordered{0.5, 0.4};
  EXPECT_THROW(ts::LearningCurve(raw, {.n_trees = 2}, unordered, {0.8, 1, true}), ts::Error);
}
