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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/random.hpp"
#include "twinscope/text.hpp"

namespace twinscope {

// Planted ground truth for synthetic data: label = 1 iff feature > cut.
struct ThresholdRule {
  Feature feature = Feature::kAlp;
  double cut = 175.0;
};

// Parses "alp>175" (whitespace allowed around the parts).
inline ThresholdRule ParseThresholdRule(std::string_view text) {
  const auto pos = text.find('>');
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::kParse, "threshold rule must look like 'feature>value'");
  }
  ThresholdRule rule;
  rule.feature = ParseFeature(Trim(text.substr(0, pos)));
  const auto cut = ParseDouble(text.substr(pos + 1));
  if (!cut || !std::isfinite(*cut)) {
    throw Error(ErrorKind::kParse, "threshold rule cut value is not a number");
  }
  rule.cut = *cut;
  return rule;
}

struct FeatureRange {
  double lo;
  double hi;
};

// Uniform sampling ranges for synthetic records. Direct bilirubin is drawn
// as a fraction of total bilirubin so it never exceeds it.
inline constexpr std::array<FeatureRange, kNumFeatures> kSynthRanges = {{
    {18.0, 85.0},   // age
    {0.0, 1.0},     // gender (Bernoulli 0.5)
    {0.3, 8.0},     // total_bilirubin
    {0.1, 0.6},     // direct_bilirubin, as a fraction of total
    {50.0, 450.0},  // alp
    {10.0, 200.0},  // alt
    {10.0, 200.0},  // ast
    {5.0, 8.5},     // total_proteins
    {2.0, 5.0},     // albumin
    {0.4, 2.0},     // ag_ratio
}};

inline Dataset SynthGenerate(std::size_t n, const ThresholdRule& rule,
                             double noise, std::uint64_t seed) {
  if (!(noise >= 0.0 && noise < 0.5)) {
    throw Error(ErrorKind::kValidation, "noise must be in [0, 0.5)", "noise");
  }
  if (n == 0) throw Error(ErrorKind::kValidation, "n must be positive", "n");
  Rng rng(seed);
  std::vector<LabeledRecord> records(n);
  for (auto& rec : records) {
    auto& p = rec.features;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      const auto [lo, hi] = kSynthRanges[j];
      switch (FeatureAt(j)) {
        case Feature::kAge:
          p.values[j] = std::floor(rng.Uniform(lo, hi + 1.0));
          break;
        case Feature::kGender:
          p.values[j] = rng.Bernoulli(0.5) ? 1.0 : 0.0;
          break;
        case Feature::kDirectBilirubin:
          p.values[j] = p[Feature::kTotalBilirubin] * rng.Uniform(lo, hi);
          break;
        default:
          p.values[j] = rng.Uniform(lo, hi);
      }
    }
    rec.risk = p[rule.feature] > rule.cut ? 1 : 0;
    if (rng.Bernoulli(noise)) rec.risk = 1 - rec.risk;
  }
  return Dataset::FromRecords(std::move(records));
}

// Parameters of the ILPD-shaped generator behind the bundled fallback file.
struct IlpdLikeParams {
  std::size_t n_risk = 416;
  std::size_t n_no_risk = 167;
  std::size_t n_missing_ag = 4;
  double male_rate = 0.76;
  // Fraction of risk patients whose labs look unremarkable.
  double occult_rate = 0.40;
  // Fraction of no-risk patients with mildly abnormal labs.
  double mild_rate = 0.12;
};

namespace detail {

// Rounds to a decimal grid; dividing the integer count keeps the result the
// nearest double to the decimal value, so it prints without noise digits.
inline double RoundTo(double v, double scale) { return std::round(v * scale) / scale; }

inline double Clamp(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

}  // namespace detail

// Heavy-tailed, class-conditional lab values with the UCI file's row count,
// class balance, gender balance and missing-A/G count. Gender carries no
// signal. Used only when the real file cannot be fetched.
inline Dataset SynthIlpdLike(std::uint64_t seed, const IlpdLikeParams& params = {}) {
  Rng rng(seed);
  std::vector<int> labels(params.n_risk, 1);
  labels.resize(params.n_risk + params.n_no_risk, 0);
  rng.Shuffle(std::span<int>(labels));

  std::vector<LabeledRecord> records;
  records.reserve(labels.size());
  for (int label : labels) {
    double severity = 0.0;
    if (label == 1 && !rng.Bernoulli(params.occult_rate)) {
      severity = rng.Uniform(0.25, 1.0);
    } else if (label == 0 && rng.Bernoulli(params.mild_rate)) {
      severity = rng.Uniform(0.0, 0.5);
    }
    LabeledRecord rec;
    rec.risk = label;
    auto& p = rec.features;
    using detail::Clamp;
    using detail::RoundTo;
    p[Feature::kAge] = std::round(Clamp(rng.Normal(42.0 + 4.0 * label, 16.0), 4, 90));
    p[Feature::kGender] = rng.Bernoulli(params.male_rate) ? 1.0 : 0.0;
    const double tb = std::exp(std::log(0.8) + 0.35 * rng.Normal() + 1.6 * severity);
    p[Feature::kTotalBilirubin] = Clamp(RoundTo(tb, 10.0), 0.4, 75.0);
    p[Feature::kDirectBilirubin] = Clamp(
        std::floor(p[Feature::kTotalBilirubin] * rng.Uniform(0.15, 0.5) * 10.0) / 10.0,
        0.1, p[Feature::kTotalBilirubin]);
    const double alp = std::exp(std::log(190.0) + 0.3 * rng.Normal() + 0.6 * severity);
    p[Feature::kAlp] = Clamp(std::round(alp), 63.0, 2110.0);
    const double log_alt = std::log(24.0) + 0.45 * rng.Normal() + 2.0 * severity;
    p[Feature::kAlt] = Clamp(std::round(std::exp(log_alt)), 10.0, 2000.0);
    const double ast = std::exp(log_alt + 0.15 + 0.35 * rng.Normal());
    p[Feature::kAst] = Clamp(std::round(ast), 10.0, 4929.0);
    const double tp = Clamp(RoundTo(rng.Normal(6.5, 1.0), 10.0), 2.7, 9.6);
    p[Feature::kTotalProteins] = tp;
    const double alb = Clamp(RoundTo(rng.Normal(3.35 - 0.5 * severity, 0.7), 10.0), 0.9,
                             std::min(5.5, RoundTo(tp - 0.5, 10.0)));
    p[Feature::kAlbumin] = alb;
    p[Feature::kAgRatio] = Clamp(RoundTo(alb / (tp - alb), 100.0), 0.3, 2.8);
    records.push_back(rec);
  }
  for (std::size_t k = 0; k < params.n_missing_ag && k < records.size(); ++k) {
    std::size_t i;
    do {
      i = rng.UniformIndex(records.size());
    } while (records[i].features.IsMissing(Feature::kAgRatio));
    records[i].features[Feature::kAgRatio] = kMissing;
  }
  return Dataset::FromRecords(std::move(records));
}

}  // namespace twinscope
