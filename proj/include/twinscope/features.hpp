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
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "twinscope/error.hpp"

namespace twinscope {

// Column order of the ILPD schema. Index values are part of the model file
// format and must not be reordered.
enum class Feature : int {
  kAge = 0,
  kGender,
  kTotalBilirubin,
  kDirectBilirubin,
  kAlp,
  kAlt,
  kAst,
  kTotalProteins,
  kAlbumin,
  kAgRatio,
};

inline constexpr std::size_t kNumFeatures = 10;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "age", "gender", "total_bilirubin", "direct_bilirubin", "alp",
    "alt", "ast",    "total_proteins",  "albumin",          "ag_ratio"};

inline constexpr std::size_t Index(Feature f) {
  return static_cast<std::size_t>(f);
}

inline constexpr std::string_view FeatureName(Feature f) {
  return kFeatureNames[Index(f)];
}

inline constexpr Feature FeatureAt(std::size_t i) {
  return static_cast<Feature>(static_cast<int>(i));
}

inline std::optional<Feature> FindFeature(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == name) return FeatureAt(i);
  }
  return std::nullopt;
}

inline Feature ParseFeature(std::string_view name) {
  if (auto f = FindFeature(name)) return *f;
  throw Error(ErrorKind::kValidation,
              "unknown feature '" + std::string(name) + "'", std::string(name));
}

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// One patient's lab/demographic vector. A missing value is stored as NaN;
// only ag_ratio may be missing, and only before imputation.
struct PatientFeatures {
  std::array<double, kNumFeatures> values{};

  double operator[](Feature f) const { return values[Index(f)]; }
  double& operator[](Feature f) { return values[Index(f)]; }

  bool IsMissing(Feature f) const { return std::isnan(values[Index(f)]); }

  bool HasMissing() const {
    for (double v : values) {
      if (std::isnan(v)) return true;
    }
    return false;
  }

  // Exact comparison that treats two missing cells as equal.
  friend bool operator==(const PatientFeatures& a, const PatientFeatures& b) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const double x = a.values[i];
      const double y = b.values[i];
      if (std::isnan(x) && std::isnan(y)) continue;
      if (x != y) return false;
    }
    return true;
  }
};

// Throws unless every value is finite (i.e. the record is fully imputed).
inline void RequireComplete(const PatientFeatures& p) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(p.values[i])) {
      throw Error(ErrorKind::kValidation,
                  "feature '" + std::string(kFeatureNames[i]) +
                      "' is missing or non-finite",
                  std::string(kFeatureNames[i]));
    }
  }
}

}  // namespace twinscope
