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

#include <cmath>
#include <concepts>
#include <string>
#include <utility>

#include "twinscope/error.hpp"
#include "twinscope/features.hpp"

namespace twinscope {

// Anything that maps a complete patient vector to a risk probability.
template <typename M>
concept Predictor = requires(const M& m, const PatientFeatures& p) {
  { m.PredictProba(p) } -> std::convertible_to<double>;
};

// Adapts a callable into a Predictor; handy for planted test models.
template <typename F>
class FunctionPredictor {
 public:
  explicit FunctionPredictor(F f) : f_(std::move(f)) {}
  double PredictProba(const PatientFeatures& p) const { return f_(p); }

 private:
  F f_;
};

template <typename F>
FunctionPredictor<F> MakePredictor(F f) {
  return FunctionPredictor<F>(std::move(f));
}

template <Predictor M>
double CheckedPredict(const M& model, const PatientFeatures& p) {
  const double v = model.PredictProba(p);
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::kNumerical, "model returned a non-finite probability");
  }
  return v;
}

}  // namespace twinscope
