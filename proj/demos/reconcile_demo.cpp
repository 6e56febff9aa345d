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

// Walks through one tuning loop: a screening rule authored at ALP 200 meets
// data whose real boundary is 175. The model's PDP finds the boundary, a
// revision is proposed, a reviewer accepts it, and the rule now flags a
// patient it used to miss.

#include <cstdio>
#include <iostream>

#include "twinscope/twinscope.hpp"

namespace ts = twinscope;

int main() {
  const auto table = ts::ParseTable(
      "table alp_screen hit FIRST\n"
      "inputs: alp\n"
      "| < 200 | -> LOW # ALP below 200\n"
      "| - | -> HIGH # ALP 200 or above\n");

  const auto data = ts::SynthGenerate(2000, {ts::Feature::kAlp, 175.0}, 0.1, 7);
  const auto split = ts::PrepareSplit(data, {0.8, 7, true});
  ts::ForestConfig cfg;
  cfg.seed = 7;
  const auto model = ts::TrainForest(split.train, cfg, {.threads = 4, .observer = {}});
  const auto report = ts::EvaluateModel(model, split.test);
  std::printf("forest: accuracy %.3f, auc %.3f on %zu test records\n", report.accuracy,
              report.auc, split.test.size());

  const auto revisions = ts::ProposeRevisions(table, model, split.train, split.train.stats);
  if (revisions.empty()) {
    std::cout << "no revision proposed\n";
    return 0;
  }
  const auto& rev = revisions.front();
  std::cout << "proposal: " << ts::DescribeRevision(rev) << '\n';

  std::cout << "evidence (alp -> mean risk):\n";
  for (std::size_t k = 0; k < rev.curve.grid.size(); k += 7) {
    std::printf("  %7.1f  %.3f\n", rev.curve.grid[k], rev.curve.pdp[k]);
  }

  ts::PatientFeatures patient;
  patient.values = {65, 0, 0.7, 0.1, 187, 16, 18, 6.8, 3.3, 0.9};
  const auto tuned = ts::ApplyRevision(table, rev);
  auto outcome = [&](const ts::DecisionTable& t) {
    return std::string(ts::RiskLevelName(*ts::Evaluate(t, patient).outcome));
  };
  std::cout << "patient with alp 187: authored rule says " << outcome(table)
            << ", tuned rule says " << outcome(tuned) << '\n';
  std::cout << "\n" << ts::PrintTable(tuned);
  return 0;
}
