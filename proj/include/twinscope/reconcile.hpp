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

// Rule reconciliation: compare an authored threshold with the boundary the
// model learned, and propose a revised bound for human review.
//
// The learned boundary of a feature is where its partial-dependence curve
// first crosses a level (by default halfway between the curve's minimum and
// maximum). Each proposal carries the curve as evidence, and a
// corroboration score from local surrogates fitted at records on either
// side of the boundary: the fraction whose contribution for the feature
// has the same sign as the curve's direction at the crossing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/explain.hpp"
#include "twinscope/features.hpp"
#include "twinscope/predictor.hpp"
#include "twinscope/random.hpp"
#include "twinscope/rulelang.hpp"
#include "twinscope/text.hpp"

namespace twinscope {

enum class CrossingLevel { kMidpoint, kFixed };

struct ReconcileConfig {
  double min_relative_shift = 0.05;
  CrossingLevel crossing = CrossingLevel::kMidpoint;
  double fixed_level = 0.5;  // used with CrossingLevel::kFixed
  PdpOptions pdp;
  // Records explained per feature for the corroboration score (half below,
  // half above the boundary).
  int corroboration_instances = 10;
  SurrogateConfig surrogate{.n_samples = 1000};
};

inline void Validate(const ReconcileConfig& cfg) {
  if (!(cfg.min_relative_shift > 0.0 && cfg.min_relative_shift < 1.0)) {
    throw Error(ErrorKind::kValidation, "min_relative_shift must be in (0, 1)",
                "min_relative_shift");
  }
  if (cfg.corroboration_instances < 0) {
    throw Error(ErrorKind::kValidation, "corroboration_instances must be >= 0");
  }
}

struct ThresholdEstimate {
  double value = 0.0;
  double level = 0.0;
  std::size_t bracket = 0;  // crossing lies in [grid[bracket], grid[bracket + 1]]
  bool increasing = true;   // curve direction at the crossing
  bool non_monotone = false;
};

inline ThresholdEstimate EmpiricalThreshold(const PdpCurve& curve,
                                            const ReconcileConfig& cfg = {}) {
  if (curve.grid.size() < 3 || curve.grid.size() != curve.pdp.size()) {
    throw Error(ErrorKind::kValidation, "curve needs at least 3 points");
  }
  const auto [mn, mx] = std::minmax_element(curve.pdp.begin(), curve.pdp.end());
  const double range = *mx - *mn;
  if (!(range > 0.0)) throw Error(ErrorKind::kNumerical, "curve is flat; no threshold");

  ThresholdEstimate est;
  est.level = cfg.crossing == CrossingLevel::kMidpoint ? 0.5 * (*mn + *mx) : cfg.fixed_level;
  const double level = est.level;
  const auto& g = curve.grid;
  const auto& p = curve.pdp;

  std::optional<std::size_t> bracket;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const bool up = p[k] < level && p[k + 1] >= level;
    const bool down = p[k] > level && p[k + 1] <= level;
    if (up || down) {
      bracket = k;
      est.increasing = up;
      break;
    }
  }
  if (!bracket) {
    throw Error(ErrorKind::kNumerical, "curve never crosses level " + FormatDouble(level));
  }
  const std::size_t k = *bracket;
  est.bracket = k;
  est.value = g[k] + (level - p[k]) / (p[k + 1] - p[k]) * (g[k + 1] - g[k]);

  // A drawdown against the crossing direction of more than 10% of the range.
  double extreme = p[0];
  for (double v : p) {
    extreme = est.increasing ? std::max(extreme, v) : std::min(extreme, v);
    if (std::fabs(extreme - v) > 0.1 * range) est.non_monotone = true;
  }
  return est;
}

struct RuleRevision {
  std::string table;
  std::size_t row = 0;
  std::size_t column_index = 0;
  Feature column = Feature::kAge;
  CellExpr old_expr;
  CellExpr proposed_expr;
  double empirical_threshold = 0.0;
  std::string method = "pdp_crossing";
  double corroboration = 0.0;
  std::size_t support = 0;  // records whose cell match flips
  bool non_monotone = false;
  PdpCurve curve;
};

namespace detail {

// Three significant digits: the proposal is read by clinicians.
inline double RoundSignificant(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const double mag = std::floor(std::log10(std::fabs(v)));
  if (mag >= 2.0) {
    const double factor = std::pow(10.0, mag - 2.0);
    return std::round(v / factor) * factor;
  }
  const double scale = std::pow(10.0, 2.0 - mag);
  return std::round(v * scale) / scale;
}

inline double RelativeShift(double authored, double empirical) {
  const double denom = std::fabs(authored);
  return denom > 0.0 ? std::fabs(empirical - authored) / denom : std::fabs(empirical);
}

// Replaces the bound of a comparison or the nearer bound of an interval.
// Returns nullopt when the cell has no threshold, the shift is too small, or
// the result would be invalid.
inline std::optional<CellExpr> ReviseCell(const CellExpr& cell, double empirical,
                                          double min_shift) {
  const double proposed = RoundSignificant(empirical);
  if (const auto* c = std::get_if<Comparison>(&cell)) {
    if (c->op == CompareOp::kEqual) return std::nullopt;
    if (RelativeShift(c->value, empirical) < min_shift || proposed == c->value) {
      return std::nullopt;
    }
    return Comparison{c->op, proposed};
  }
  if (const auto* iv = std::get_if<Interval>(&cell)) {
    const bool lower = std::fabs(empirical - iv->lo) <= std::fabs(empirical - iv->hi);
    const double authored = lower ? iv->lo : iv->hi;
    if (RelativeShift(authored, empirical) < min_shift || proposed == authored) {
      return std::nullopt;
    }
    Interval next = *iv;
    (lower ? next.lo : next.hi) = proposed;
    if (!(next.lo < next.hi || (next.lo == next.hi && next.lo_closed && next.hi_closed))) {
      return std::nullopt;
    }
    return next;
  }
  return std::nullopt;
}

struct FeatureEvidence {
  PdpCurve curve;
  std::optional<ThresholdEstimate> threshold;
  double corroboration = 0.0;
};

template <Predictor M>
double Corroborate(const M& model, const Dataset& ds, const FeatureStats& stats,
                   Feature feature, const ThresholdEstimate& est, const ReconcileConfig& cfg) {
  const auto want = static_cast<std::size_t>(cfg.corroboration_instances);
  if (want == 0) return 0.0;
  // Nearest records below and above the boundary, ties by file order.
  std::vector<std::pair<double, std::size_t>> below, above;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records[i].features;
    if (r.HasMissing()) continue;
    const double d = r[feature] - est.value;
    (d < 0.0 ? below : above).emplace_back(std::fabs(d), i);
  }
  std::sort(below.begin(), below.end());
  std::sort(above.begin(), above.end());
  std::vector<std::size_t> picked;
  const std::size_t half = (want + 1) / 2;
  for (std::size_t i = 0; i < std::min(half, below.size()); ++i) picked.push_back(below[i].second);
  for (std::size_t i = 0; i < std::min(want - std::min(half, below.size()), above.size()); ++i) {
    picked.push_back(above[i].second);
  }
  if (picked.empty()) return 0.0;
  std::size_t agree = 0;
  for (std::size_t i : picked) {
    SurrogateConfig sc = cfg.surrogate;
    sc.seed = MixSeed(cfg.surrogate.seed, i);
    const auto e = ExplainInstance(model, ds.records[i].features, stats, sc);
    const double c = e.contributions[Index(feature)];
    if ((est.increasing && c > 0.0) || (!est.increasing && c < 0.0)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(picked.size());
}

}  // namespace detail

// One proposal per threshold cell whose learned boundary differs from the
// authored bound by at least min_relative_shift (relative to the bound).
// `ds` supplies the curve's records; `train_stats` backs the surrogates.
template <Predictor M>
std::vector<RuleRevision> ProposeRevisions(const DecisionTable& table, const M& model,
                                           const Dataset& ds, const FeatureStats& train_stats,
                                           const ReconcileConfig& cfg = {}) {
  Validate(cfg);
  std::map<Feature, detail::FeatureEvidence> evidence;
  auto evidence_for = [&](Feature f) -> const detail::FeatureEvidence& {
    auto it = evidence.find(f);
    if (it != evidence.end()) return it->second;
    detail::FeatureEvidence ev;
    ev.curve = Pdp(model, ds, f, cfg.pdp);
    try {
      ev.threshold = EmpiricalThreshold(ev.curve, cfg);
    } catch (const Error&) {
      ev.threshold.reset();
    }
    if (ev.threshold) {
      ev.corroboration = detail::Corroborate(model, ds, train_stats, f, *ev.threshold, cfg);
    }
    return evidence.emplace(f, std::move(ev)).first->second;
  };

  std::vector<RuleRevision> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t k = 0; k < table.inputs.size(); ++k) {
      const CellExpr& cell = table.rows[r].cells[k];
      const bool numeric = std::holds_alternative<Interval>(cell) ||
                           (std::holds_alternative<Comparison>(cell) &&
                            std::get<Comparison>(cell).op != CompareOp::kEqual);
      if (!numeric) continue;
      const Feature f = table.inputs[k];
      const auto& ev = evidence_for(f);
      if (!ev.threshold) continue;
      const auto proposed =
          detail::ReviseCell(cell, ev.threshold->value, cfg.min_relative_shift);
      if (!proposed) continue;
      std::size_t support = 0;
      for (const auto& rec : ds.records) {
        if (rec.features.IsMissing(f)) continue;
        const double v = rec.features[f];
        support += Matches(cell, v) != Matches(*proposed, v) ? 1 : 0;
      }
      if (support == 0) continue;
      RuleRevision rev;
      rev.table = table.name;
      rev.row = r;
      rev.column_index = k;
      rev.column = f;
      rev.old_expr = cell;
      rev.proposed_expr = *proposed;
      rev.empirical_threshold = ev.threshold->value;
      rev.corroboration = ev.corroboration;
      rev.support = support;
      rev.non_monotone = ev.threshold->non_monotone;
      rev.curve = ev.curve;
      out.push_back(std::move(rev));
    }
  }
  return out;
}

inline std::string DescribeRevision(const RuleRevision& rev) {
  std::ostringstream os;
  os << "row " << rev.row << ' ' << FeatureName(rev.column) << ": " << PrintExpr(rev.old_expr)
     << " => " << PrintExpr(rev.proposed_expr) << " (" << rev.method << ", empirical "
     << FormatDouble(detail::RoundSignificant(rev.empirical_threshold)) << ", corroboration "
     << FormatDouble(rev.corroboration) << ", support " << rev.support
     << (rev.non_monotone ? ", non_monotone" : "") << ')';
  return os.str();
}

// Returns a new table with the revised cell; `table` is not modified.
inline DecisionTable ApplyRevision(const DecisionTable& table, const RuleRevision& rev) {
  if (rev.row >= table.rows.size() || rev.column_index >= table.inputs.size() ||
      table.inputs[rev.column_index] != rev.column) {
    throw Error(ErrorKind::kConflict, "revision does not refer to a cell of table '" +
                                          table.name + "'");
  }
  if (table.rows[rev.row].cells[rev.column_index] != rev.old_expr) {
    throw Error(ErrorKind::kConflict,
                "stale revision: cell no longer equals '" + PrintExpr(rev.old_expr) + "'");
  }
  DecisionTable next = table;
  next.rows[rev.row].cells[rev.column_index] = rev.proposed_expr;
  next.history.push_back(DescribeRevision(rev));
  return next;
}

// Line-oriented report, one revision per line.
inline std::string RevisionReport(std::span<const RuleRevision> revisions) {
  std::ostringstream os;
  for (const auto& rev : revisions) {
    os << "revision table=" << rev.table << " row=" << rev.row
       << " column=" << FeatureName(rev.column) << " old=\"" << PrintExpr(rev.old_expr)
       << "\" new=\"" << PrintExpr(rev.proposed_expr)
       << "\" empirical=" << FormatDouble(rev.empirical_threshold)
       << " corroboration=" << FormatDouble(rev.corroboration) << " support=" << rev.support
       << " method=" << rev.method << (rev.non_monotone ? " non_monotone" : "") << '\n';
  }
  return os.str();
}

}  // namespace twinscope
