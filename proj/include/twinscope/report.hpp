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

// CSV artifacts for plotting. Numbers use shortest round-trip form.

#include <ostream>
#include <span>

#include "twinscope/explain.hpp"
#include "twinscope/metrics.hpp"
#include "twinscope/text.hpp"

namespace twinscope {

inline void WritePdpCsv(std::ostream& out, const PdpCurve& curve) {
  out << "grid,pdp\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    out << FormatDouble(curve.grid[k]) << ',' << FormatDouble(curve.pdp[k]) << '\n';
  }
}

inline void WriteLearningCurveCsv(std::ostream& out, std::span<const LearningCurvePoint> curve) {
  out << "train_size,train_accuracy,validation_accuracy\n";
  for (const auto& p : curve) {
    out << p.train_size << ',' << FormatDouble(p.train_accuracy) << ','
        << FormatDouble(p.validation_accuracy) << '\n';
  }
}

// One row per feature plus "intercept", "prediction" and "local_fidelity"
// rows, so the file alone reproduces the explanation.
inline void WriteExplanationCsv(std::ostream& out, const Explanation& e) {
  out << "feature,value,contribution\n";
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    out << kFeatureNames[j] << ',' << FormatDouble(e.instance.values[j]) << ','
        << FormatDouble(e.contributions[j]) << '\n';
  }
  out << "intercept,," << FormatDouble(e.intercept) << '\n';
  out << "prediction,," << FormatDouble(e.prediction) << '\n';
  out << "local_fidelity,," << FormatDouble(e.local_fidelity) << '\n';
}

}  // namespace twinscope
