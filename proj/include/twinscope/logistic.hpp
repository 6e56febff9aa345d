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

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/features.hpp"

namespace twinscope {

inline constexpr std::size_t kNumWeights = kNumFeatures + 1;  // bias last
using LogisticWeights = std::array<double, kNumWeights>;

struct LogisticConfig {
  double l2 = 1e-4;
  int iters = 2000;
  double lr = 0.1;

  friend bool operator==(const LogisticConfig&, const LogisticConfig&) = default;
};

struct Standardizer {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> std{};  // always > 0

  // Population moments of the training rows; a constant column gets std 1.
  static Standardizer From(const FeatureStats& stats) {
    Standardizer s;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      s.mean[j] = stats[j].mean;
      s.std[j] = stats[j].std > 0.0 ? stats[j].std : 1.0;
    }
    return s;
  }

  std::array<double, kNumFeatures> Apply(const PatientFeatures& p) const {
    std::array<double, kNumFeatures> z{};
    for (std::size_t j = 0; j < kNumFeatures; ++j) z[j] = (p.values[j] - mean[j]) / std[j];
    return z;
  }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

inline double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + exp(s)) without overflow.
inline double Softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

struct LogisticModel {
  LogisticWeights weights{};
  Standardizer standardization;
  FeatureStats training_stats{};
  LogisticConfig config;

  double Score(const PatientFeatures& p) const {
    const auto z = standardization.Apply(p);
    double s = weights[kNumFeatures];
    for (std::size_t j = 0; j < kNumFeatures; ++j) s += weights[j] * z[j];
    return s;
  }

  double PredictProba(const PatientFeatures& p) const { return Sigmoid(Score(p)); }

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

// Mean negative log-likelihood plus (l2 / 2) * |w|^2 over the standardized
// design; the bias is not penalised.
class LogisticObjective {
 public:
  LogisticObjective(const Dataset& train, const Standardizer& standardizer, double l2)
      : l2_(l2) {
    z_.reserve(train.size());
    y_.reserve(train.size());
    for (const auto& r : train.records) {
      z_.push_back(standardizer.Apply(r.features));
      y_.push_back(static_cast<double>(r.risk));
    }
  }

  double Loss(const LogisticWeights& w) const {
    double total = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
      const double s = Score(w, i);
      total += Softplus(s) - y_[i] * s;
    }
    double penalty = 0.0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) penalty += w[j] * w[j];
    return total / static_cast<double>(z_.size()) + 0.5 * l2_ * penalty;
  }

  LogisticWeights Gradient(const LogisticWeights& w) const {
    LogisticWeights g{};
    for (std::size_t i = 0; i < z_.size(); ++i) {
      const double r = Sigmoid(Score(w, i)) - y_[i];
      for (std::size_t j = 0; j < kNumFeatures; ++j) g[j] += r * z_[i][j];
      g[kNumFeatures] += r;
    }
    const double inv_n = 1.0 / static_cast<double>(z_.size());
    for (std::size_t j = 0; j < kNumWeights; ++j) g[j] *= inv_n;
    for (std::size_t j = 0; j < kNumFeatures; ++j) g[j] += l2_ * w[j];
    return g;
  }

 private:
  double Score(const LogisticWeights& w, std::size_t i) const {
    double s = w[kNumFeatures];
    for (std::size_t j = 0; j < kNumFeatures; ++j) s += w[j] * z_[i][j];
    return s;
  }

  std::vector<std::array<double, kNumFeatures>> z_;
  std::vector<double> y_;
  double l2_;
};

// Full-batch gradient descent from zero weights. A step that would raise
// the loss is rejected and retried at half the step size, so accepted
// losses never increase. `loss_trace`, when given, receives the loss after
// every accepted step (starting with the initial loss).
inline LogisticModel TrainLogistic(const Dataset& train, const LogisticConfig& cfg = {},
                                   std::vector<double>* loss_trace = nullptr) {
  if (train.empty()) throw Error(ErrorKind::kValidation, "training set is empty");
  const auto pos = train.CountPositive();
  if (pos == 0 || pos == train.size()) {
    throw Error(ErrorKind::kValidation, "training data contains a single class");
  }
  for (const auto& r : train.records) RequireComplete(r.features);
  if (!(cfg.lr > 0.0) || cfg.iters < 0 || !(cfg.l2 >= 0.0)) {
    throw Error(ErrorKind::kValidation, "invalid logistic configuration");
  }

  LogisticModel model;
  model.config = cfg;
  model.training_stats = train.stats;
  model.standardization = Standardizer::From(train.stats);
  const LogisticObjective objective(train, model.standardization, cfg.l2);

  LogisticWeights w{};
  double loss = objective.Loss(w);
  double lr = cfg.lr;
  if (loss_trace) loss_trace->push_back(loss);
  for (int it = 0; it < cfg.iters; ++it) {
    const auto g = objective.Gradient(w);
    bool accepted = false;
    for (int halvings = 0; halvings < 60 && !accepted; ++halvings) {
      LogisticWeights next = w;
      for (std::size_t j = 0; j < kNumWeights; ++j) next[j] -= lr * g[j];
      const double next_loss = objective.Loss(next);
      if (next_loss <= loss) {
        w = next;
        loss = next_loss;
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) break;  // converged to machine precision
    if (loss_trace) loss_trace->push_back(loss);
  }
  model.weights = w;
  return model;
}

}  // namespace twinscope
