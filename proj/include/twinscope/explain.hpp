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

// Model-agnostic explanations.
//
// Local surrogate: perturbations are drawn from the training distribution
// (independent normals per feature, Bernoulli for gender), weighted by an
// exponential kernel on their standardized distance to the instance, and
// the black box's probabilities are regressed on the standardized
// perturbations with weighted ridge. The coefficients are the signed
// per-feature contributions.
//
// Partial dependence: the feature is swept over a grid while every record
// keeps its other values; each grid point reports the mean prediction.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/logistic.hpp"
#include "twinscope/predictor.hpp"
#include "twinscope/random.hpp"

namespace twinscope {

struct SurrogateConfig {
  int n_samples = 5000;
  double kernel_width = 0.75 * std::sqrt(static_cast<double>(kNumFeatures));
  double ridge_lambda = 1e-3;
  std::uint64_t seed = 0;
  // Regress on same-quartile-as-instance indicators instead of standardized
  // values.
  bool discretize = false;
};

inline void Validate(const SurrogateConfig& cfg) {
  if (cfg.n_samples < 100) {
    throw Error(ErrorKind::kValidation, "n_samples must be >= 100", "n_samples");
  }
  if (!(cfg.kernel_width > 0.0)) {
    throw Error(ErrorKind::kValidation, "kernel_width must be positive", "kernel_width");
  }
  if (!(cfg.ridge_lambda >= 0.0)) {
    throw Error(ErrorKind::kValidation, "ridge_lambda must be >= 0", "ridge_lambda");
  }
}

using Contributions = std::array<double, kNumFeatures>;

struct Explanation {
  PatientFeatures instance;
  double prediction = 0.0;
  Contributions contributions{};
  double intercept = 0.0;
  double local_fidelity = 0.0;  // weighted R^2
};

// Perturbed samples around one instance, in the representation the
// surrogate is fitted on.
struct Neighborhood {
  std::vector<PatientFeatures> samples;
  Eigen::MatrixXd design;   // n x d
  Eigen::VectorXd weights;  // kernel weights scaled to mean 1
};

namespace detail {

inline int QuartileBin(const FeatureSummary& s, double v) {
  if (v <= s.q1) return 0;
  if (v <= s.median) return 1;
  if (v <= s.q3) return 2;
  return 3;
}

}  // namespace detail

inline Neighborhood DrawNeighborhood(const PatientFeatures& instance,
                                     const FeatureStats& stats,
                                     const SurrogateConfig& cfg) {
  Validate(cfg);
  RequireComplete(instance);
  const auto n = static_cast<std::size_t>(cfg.n_samples);
  const auto standardizer = Standardizer::From(stats);
  const double gender_rate = stats[Index(Feature::kGender)].mean;

  Rng rng(cfg.seed);
  Neighborhood hood;
  hood.samples.resize(n);
  for (auto& s : hood.samples) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      if (FeatureAt(j) == Feature::kGender) {
        s.values[j] = rng.Bernoulli(gender_rate) ? 1.0 : 0.0;
      } else {
        s.values[j] = rng.Normal(stats[j].mean, stats[j].std);
      }
    }
  }

  hood.design.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumFeatures));
  Eigen::VectorXd raw(static_cast<Eigen::Index>(n));
  const auto z0 = standardizer.Apply(instance);
  const double kw2 = cfg.kernel_width * cfg.kernel_width;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double dist2 = 0.0;
    if (cfg.discretize) {
      for (std::size_t j = 0; j < kNumFeatures; ++j) {
        const double v = hood.samples[i].values[j];
        const bool same = FeatureAt(j) == Feature::kGender
                              ? v == instance.values[j]
                              : detail::QuartileBin(stats[j], v) ==
                                    detail::QuartileBin(stats[j], instance.values[j]);
        hood.design(row, static_cast<Eigen::Index>(j)) = same ? 1.0 : 0.0;
        dist2 += same ? 0.0 : 1.0;
      }
    } else {
      const auto z = standardizer.Apply(hood.samples[i]);
      for (std::size_t j = 0; j < kNumFeatures; ++j) {
        hood.design(row, static_cast<Eigen::Index>(j)) = z[j];
        dist2 += (z[j] - z0[j]) * (z[j] - z0[j]);
      }
    }
    raw(row) = std::exp(-dist2 / kw2);
  }
  if (raw.maxCoeff() < 1e-12) {
    throw Error(ErrorKind::kNumerical,
                "all perturbation weights are ~0 for this instance; increase kernel_width",
                "kernel_width");
  }
  hood.weights = raw * (static_cast<double>(n) / raw.sum());
  return hood;
}

struct RidgeFit {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double r_squared = 1.0;  // weighted; 1 for a constant target
};

// Minimises sum_i w_i (y_i - b - z_i . beta)^2 + lambda |beta|^2 with the
// intercept unpenalised, by centring on the weighted means and solving the
// normal equations.
inline RidgeFit FitWeightedRidge(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, double lambda) {
  const double wsum = w.sum();
  const Eigen::RowVectorXd zbar = (w.transpose() * z) / wsum;
  const double ybar = w.dot(y) / wsum;
  const Eigen::MatrixXd zc = z.rowwise() - zbar;
  const Eigen::VectorXd yc = y.array() - ybar;
  const Eigen::MatrixXd wz = zc.array().colwise() * w.array();
  Eigen::MatrixXd gram = wz.transpose() * zc;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = wz.transpose() * yc;

  RidgeFit fit;
  fit.coefficients = gram.ldlt().solve(rhs);
  fit.intercept = ybar - zbar.dot(fit.coefficients);
  const Eigen::VectorXd resid = yc - zc * fit.coefficients;
  const double sse = w.dot(resid.cwiseProduct(resid));
  const double sst = w.dot(yc.cwiseProduct(yc));
  fit.r_squared = sst <= 1e-24 * wsum ? 1.0 : std::clamp(1.0 - sse / sst, 0.0, 1.0);
  return fit;
}

template <Predictor M>
Explanation ExplainInstance(const M& model, const PatientFeatures& instance,
                            const FeatureStats& train_stats, const SurrogateConfig& cfg) {
  const auto hood = DrawNeighborhood(instance, train_stats, cfg);
  Eigen::VectorXd y(static_cast<Eigen::Index>(hood.samples.size()));
  for (std::size_t i = 0; i < hood.samples.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = CheckedPredict(model, hood.samples[i]);
  }
  const auto fit = FitWeightedRidge(hood.design, y, hood.weights, cfg.ridge_lambda);

  Explanation e;
  e.instance = instance;
  e.prediction = CheckedPredict(model, instance);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    e.contributions[j] = fit.coefficients(static_cast<Eigen::Index>(j));
  }
  e.intercept = fit.intercept;
  e.local_fidelity = fit.r_squared;
  return e;
}

struct FeatureImportance {
  Feature feature = Feature::kAge;
  double mean_abs_contribution = 0.0;
};

// Features ordered by mean |contribution|, largest first; ties keep column
// order.
inline std::vector<FeatureImportance> AggregateExplanations(
    std::span<const Explanation> explanations) {
  if (explanations.empty()) {
    throw Error(ErrorKind::kValidation, "at least one explanation is required");
  }
  std::vector<FeatureImportance> out(kNumFeatures);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double sum = 0.0;
    for (const auto& e : explanations) sum += std::fabs(e.contributions[j]);
    out[j] = {FeatureAt(j), sum / static_cast<double>(explanations.size())};
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.mean_abs_contribution > b.mean_abs_contribution;
  });
  return out;
}

struct PdpCurve {
  Feature feature = Feature::kAge;
  std::vector<double> grid;  // strictly ascending
  std::vector<double> pdp;
  double range_effect = 0.0;
  std::string warning;  // set for a constant feature
};

inline double PdpFlatness(const PdpCurve& curve) {
  if (curve.pdp.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(curve.pdp.begin(), curve.pdp.end());
  return *hi - *lo;
}

struct PdpOptions {
  int grid_size = 50;
  double clip_lo = 1.0;  // percentiles
  double clip_hi = 99.0;
};

// Grid of `grid_size` equally spaced values between the clip percentiles of
// the feature in `ds`; gender always uses {0, 1}.
inline std::vector<double> PdpGrid(const Dataset& ds, Feature feature,
                                   const PdpOptions& opts = {}) {
  if (feature == Feature::kGender) return {0.0, 1.0};
  std::vector<double> column;
  for (const auto& r : ds.records) {
    if (!r.features.IsMissing(feature)) column.push_back(r.features[feature]);
  }
  if (column.empty()) {
    throw Error(ErrorKind::kValidation, "feature has no observed values",
                std::string(FeatureName(feature)));
  }
  std::sort(column.begin(), column.end());
  const double lo = Percentile(column, opts.clip_lo);
  const double hi = Percentile(column, opts.clip_hi);
  if (!(hi > lo)) return {lo};
  const auto g = static_cast<std::size_t>(opts.grid_size);
  std::vector<double> grid(g);
  for (std::size_t k = 0; k < g; ++k) {
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(g - 1);
  }
  grid.back() = hi;
  return grid;
}

template <Predictor M>
PdpCurve Pdp(const M& model, const Dataset& ds, Feature feature,
             const PdpOptions& opts = {}) {
  if (ds.empty()) throw Error(ErrorKind::kValidation, "dataset is empty");
  if (opts.grid_size < 2) {
    throw Error(ErrorKind::kValidation, "grid_size must be >= 2", "grid_size");
  }
  if (!(opts.clip_lo >= 0.0 && opts.clip_lo < opts.clip_hi && opts.clip_hi <= 100.0)) {
    throw Error(ErrorKind::kValidation, "clip percentiles must satisfy 0 <= lo < hi <= 100");
  }
  PdpCurve curve;
  curve.feature = feature;
  curve.grid = PdpGrid(ds, feature, opts);
  if (curve.grid.size() == 1) {
    curve.warning = "feature '" + std::string(FeatureName(feature)) +
                    "' is constant over the clip range; curve has a single point";
  }
  std::vector<PatientFeatures> probes;
  probes.reserve(ds.size());
  for (const auto& r : ds.records) {
    auto p = r.features;
    p[feature] = 0.0;
    RequireComplete(p);
    probes.push_back(p);
  }
  curve.pdp.reserve(curve.grid.size());
  for (double g : curve.grid) {
    double sum = 0.0;
    for (auto& p : probes) {
      p[feature] = g;
      sum += CheckedPredict(model, p);
    }
    curve.pdp.push_back(sum / static_cast<double>(probes.size()));
  }
  curve.range_effect = PdpFlatness(curve);
  return curve;
}

}  // namespace twinscope
