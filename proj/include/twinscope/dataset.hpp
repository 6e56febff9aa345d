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
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/random.hpp"

namespace twinscope {

struct LabeledRecord {
  PatientFeatures features;
  int risk = 0;  // 0 = no risk, 1 = risk

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

// Percentile with linear interpolation between order statistics (the
// "linear" method of most numerical packages). `sorted` must be ascending
// and nonempty; q is in [0, 100].
inline double Percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return kMissing;
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct FeatureSummary {
  std::size_t count = 0;  // non-missing values
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;

  friend bool operator==(const FeatureSummary&,
                         const FeatureSummary&) = default;
};

using FeatureStats = std::array<FeatureSummary, kNumFeatures>;

// Missing cells are skipped. Mean and variance use Welford's update.
inline FeatureStats ComputeStats(std::span<const LabeledRecord> records) {
  FeatureStats stats{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    std::vector<double> column;
    column.reserve(records.size());
    double mean = 0.0;
    double m2 = 0.0;
    for (const auto& r : records) {
      const double v = r.features.values[j];
      if (std::isnan(v)) continue;
      column.push_back(v);
      const double delta = v - mean;
      mean += delta / static_cast<double>(column.size());
      m2 += delta * (v - mean);
    }
    FeatureSummary& s = stats[j];
    s.count = column.size();
    if (column.empty()) continue;
    std::sort(column.begin(), column.end());
    s.mean = mean;
    s.std = std::sqrt(m2 / static_cast<double>(column.size()));
    s.min = column.front();
    s.max = column.back();
    s.q1 = Percentile(column, 25.0);
    s.median = Percentile(column, 50.0);
    s.q3 = Percentile(column, 75.0);
  }
  return stats;
}

// Records plus the statistics of the training portion they are judged
// against. For a freshly loaded file the stats describe all records; after
// Split() both halves carry the training half's stats.
struct Dataset {
  std::vector<LabeledRecord> records;
  FeatureStats stats{};

  static Dataset FromRecords(std::vector<LabeledRecord> records) {
    Dataset ds;
    ds.records = std::move(records);
    ds.stats = ComputeStats(ds.records);
    return ds;
  }

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::size_t CountPositive() const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(),
        [](const LabeledRecord& r) { return r.risk == 1; }));
  }

  std::size_t CountMissing() const {
    std::size_t n = 0;
    for (const auto& r : records) {
      for (double v : r.features.values) n += std::isnan(v) ? 1 : 0;
    }
    return n;
  }
};

// Replaces missing A/G ratios with the median carried in ds.stats (the
// training-split median). Stats are left as they are, so the operation is
// idempotent.
inline Dataset Impute(const Dataset& ds) {
  Dataset out = ds;
  const double fill = ds.stats[Index(Feature::kAgRatio)].median;
  for (auto& r : out.records) {
    if (r.features.IsMissing(Feature::kAgRatio)) {
      r.features[Feature::kAgRatio] = fill;
    }
  }
  return out;
}

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

namespace detail {

// Allocates round(total * fraction) training slots across strata by largest
// remainder, so the overall size matches the unstratified split and each
// class deviates from its exact share by less than one record.
inline std::vector<std::size_t> AllocateTrainCounts(
    const std::vector<std::size_t>& strata_sizes, double fraction) {
  std::size_t total = 0;
  for (auto n : strata_sizes) total += n;
  const auto target =
      static_cast<std::size_t>(std::llround(static_cast<double>(total) * fraction));
  std::vector<std::size_t> counts(strata_sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < strata_sizes.size(); ++k) {
    const double exact = static_cast<double>(strata_sizes[k]) * fraction;
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const std::size_t k = remainders[i].second;
    if (counts[k] < strata_sizes[k]) {
      ++counts[k];
      ++assigned;
    }
  }
  return counts;
}

}  // namespace detail

// Deterministic train/test partition. Both halves keep the input order and
// carry the training half's statistics.
inline SplitResult Split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::kValidation, "train_fraction must be in (0, 1)",
                "train_fraction");
  }
  if (ds.empty()) throw Error(ErrorKind::kValidation, "cannot split an empty dataset");

  std::vector<std::vector<std::size_t>> strata(spec.stratified ? 2 : 1);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    strata[spec.stratified ? ds.records[i].risk : 0].push_back(i);
  }
  std::vector<std::size_t> sizes;
  for (const auto& s : strata) sizes.push_back(s.size());
  const auto train_counts = detail::AllocateTrainCounts(sizes, spec.train_fraction);

  Rng rng(spec.seed);
  std::vector<bool> in_train(ds.records.size(), false);
  std::size_t n_train = 0;
  for (std::size_t k = 0; k < strata.size(); ++k) {
    rng.Shuffle(std::span<std::size_t>(strata[k]));
    for (std::size_t i = 0; i < train_counts[k]; ++i) in_train[strata[k][i]] = true;
    n_train += train_counts[k];
  }
  if (n_train == 0 || n_train == ds.records.size()) {
    throw Error(ErrorKind::kValidation,
                "train_fraction leaves one side of the split empty",
                "train_fraction");
  }

  std::vector<LabeledRecord> train;
  std::vector<LabeledRecord> test;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    (in_train[i] ? train : test).push_back(ds.records[i]);
  }
  SplitResult out;
  out.train = Dataset::FromRecords(std::move(train));
  out.test.records = std::move(test);
  out.test.stats = out.train.stats;
  return out;
}

}  // namespace twinscope

namespace twinscope {

// Split followed by imputation of both halves from the training half's
// medians. This is the preparation every training command shares.
inline SplitResult PrepareSplit(const Dataset& raw, const SplitSpec& spec) {
  auto parts = Split(raw, spec);
  parts.train = Impute(parts.train);
  parts.test = Impute(parts.test);
  return parts;
}

}  // namespace twinscope
