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

// JSON wire format shared by the HTTP service and the CLI's --json output.
// Objects are emitted with a fixed key order so equal values always
// serialize to identical bytes.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "twinscope/error.hpp"
#include "twinscope/explain.hpp"
#include "twinscope/features.hpp"
#include "twinscope/metrics.hpp"
#include "twinscope/reconcile.hpp"
#include "twinscope/rulelang.hpp"
#include "twinscope/timestamp.hpp"
#include "twinscope/twin_store.hpp"

namespace twinscope::wire {

using Json = nlohmann::ordered_json;

inline Json FeaturesToJson(const PatientFeatures& p) {
  Json out = Json::object();
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const double v = p.values[j];
    out[std::string(kFeatureNames[j])] = std::isnan(v) ? Json(nullptr) : Json(v);
  }
  return out;
}

inline double NumberField(const Json& v, const std::string& name) {
  if (!v.is_number()) {
    throw Error(ErrorKind::kValidation, "'" + name + "' must be a number", name);
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw Error(ErrorKind::kValidation, "'" + name + "' must be finite", name);
  }
  return d;
}

// Partial feature map, e.g. what-if overrides. Unknown names and
// non-numeric or non-finite values are rejected.
inline std::vector<std::pair<Feature, double>> FeatureMapFromJson(const Json& obj) {
  if (!obj.is_object()) throw Error(ErrorKind::kValidation, "expected an object of features");
  std::vector<std::pair<Feature, double>> out;
  for (const auto& [key, value] : obj.items()) {
    const auto f = ParseFeature(key);
    out.emplace_back(f, NumberField(value, key));
  }
  return out;
}

// All ten features required.
inline PatientFeatures FeaturesFromJson(const Json& obj) {
  PatientFeatures p;
  p.values.fill(kMissing);
  for (const auto& [f, v] : FeatureMapFromJson(obj)) p[f] = v;
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    if (std::isnan(p.values[j])) {
      const std::string name(kFeatureNames[j]);
      throw Error(ErrorKind::kValidation, "missing feature '" + name + "'", name);
    }
  }
  return p;
}

inline Json ToJson(const TableDecision& d) {
  Json out = Json::object();
  out["outcome"] = d.outcome ? Json(std::string(RiskLevelName(*d.outcome))) : Json(nullptr);
  out["matched_rows"] = d.matched_rows;
  out["trace"] = d.trace;
  return out;
}

inline Json ToJson(const Explanation& e) {
  Json out = Json::object();
  out["prediction"] = e.prediction;
  out["intercept"] = e.intercept;
  out["local_fidelity"] = e.local_fidelity;
  Json contributions = Json::object();
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    contributions[std::string(kFeatureNames[j])] = e.contributions[j];
  }
  out["contributions"] = std::move(contributions);
  Json ranking = Json::array();
  for (const auto& fi : AggregateExplanations(std::span<const Explanation>(&e, 1))) {
    ranking.push_back(std::string(FeatureName(fi.feature)));
  }
  out["ranking"] = std::move(ranking);
  return out;
}

inline Json ToJson(const PdpCurve& c) {
  Json out = Json::object();
  out["feature"] = std::string(FeatureName(c.feature));
  out["grid"] = c.grid;
  out["pdp"] = c.pdp;
  out["range_effect"] = c.range_effect;
  if (!c.warning.empty()) out["warning"] = c.warning;
  return out;
}

inline Json ToJson(const EvalReport& r) {
  Json out = Json::object();
  out["accuracy"] = r.accuracy;
  out["auc"] = r.auc;
  out["n_test"] = r.n_test;
  out["confusion"] = {{"true_negative", r.confusion[0][0]},
                      {"false_positive", r.confusion[0][1]},
                      {"false_negative", r.confusion[1][0]},
                      {"true_positive", r.confusion[1][1]}};
  return out;
}

inline Json ToJson(const TwinState& s) {
  Json out = Json::object();
  out["id"] = s.patient_id;
  out["snapshot"] = FeaturesToJson(s.snapshot);
  out["log_length"] = s.log_length;
  out["updated_at"] = FormatTimestamp(s.updated_at);
  return out;
}

inline Json ToJson(const HistoryPoint& h) {
  Json out = Json::object();
  out["observed_at"] = FormatTimestamp(h.observed_at);
  out["value"] = h.value;
  out["source"] = h.source;
  return out;
}

inline Json ToJson(const RuleRevision& r, const std::string& id) {
  Json out = Json::object();
  out["id"] = id;
  out["table"] = r.table;
  out["row"] = r.row;
  out["column"] = std::string(FeatureName(r.column));
  out["old_expr"] = PrintExpr(r.old_expr);
  out["proposed_expr"] = PrintExpr(r.proposed_expr);
  out["empirical_threshold"] = r.empirical_threshold;
  out["method"] = r.method;
  out["corroboration"] = r.corroboration;
  out["support"] = r.support;
  out["non_monotone"] = r.non_monotone;
  out["curve"] = ToJson(r.curve);
  return out;
}

inline Json ToJson(const DecisionTable& t) {
  Json out = Json::object();
  out["name"] = t.name;
  out["hit_policy"] = std::string(HitPolicyName(t.hit_policy));
  Json inputs = Json::array();
  for (Feature f : t.inputs) inputs.push_back(std::string(FeatureName(f)));
  out["inputs"] = std::move(inputs);
  if (t.hit_policy == HitPolicy::kPriority) {
    Json order = Json::array();
    for (RiskLevel r : t.priority_order) order.push_back(std::string(RiskLevelName(r)));
    out["priority"] = std::move(order);
  }
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json cells = Json::array();
    for (const auto& c : row.cells) cells.push_back(PrintExpr(c));
    rows.push_back({{"cells", cells},
                    {"output", std::string(RiskLevelName(row.output))},
                    {"annotation", row.annotation}});
  }
  out["rows"] = std::move(rows);
  out["history"] = t.history;
  return out;
}

inline Json ErrorBody(const Error& e) {
  Json out = Json::object();
  out["error"] = std::string(ErrorKindName(e.kind()));
  if (!e.field().empty()) out["field"] = e.field();
  out["detail"] = e.what();
  return out;
}

inline int HttpStatus(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return 400;
    case ErrorKind::kValidation: return 422;
    case ErrorKind::kNumerical: return 422;
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kAmbiguous: return 409;
    case ErrorKind::kUnavailable: return 503;
    case ErrorKind::kIo: return 500;
  }
  return 500;
}

}  // namespace twinscope::wire
