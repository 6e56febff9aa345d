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

// Decision tables over PatientFeatures.
//
// Cell grammar (whitespace-insensitive):
//
//   cell     := "-"                               wildcard
//             | op number                         comparison
//             | ("[" | "(") number ".." number ("]" | ")")   interval
//             | integer                           enum equality
//   op       := "<" | "<=" | ">" | ">=" | "="
//
// A bare integer is an equality test against an encoded category (gender is
// 0 = female, 1 = male); "= 1" is a numeric comparison and stays distinct.
//
// Table document, one item per line:
//
//   table <name> hit <UNIQUE|FIRST|PRIORITY>
//   inputs: <feature>, <feature>, ...
//   priority: HIGH > MEDIUM > LOW          (PRIORITY tables only)
//   history: <free text>                   (zero or more)
//   | <cell> | <cell> | ... | -> <LOW|MEDIUM|HIGH> # <annotation>
//
// Blank lines and lines starting with '#' are ignored by the parser.
// PrintTable emits the canonical form, which ParseTable reads back exactly.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/text.hpp"

namespace twinscope {

enum class CompareOp { kLess, kLessEqual, kGreater, kGreaterEqual, kEqual };

struct Wildcard {
  friend bool operator==(const Wildcard&, const Wildcard&) = default;
};

struct Comparison {
  CompareOp op = CompareOp::kLess;
  double value = 0.0;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct EnumEq {
  long long value = 0;
  friend bool operator==(const EnumEq&, const EnumEq&) = default;
};

using CellExpr = std::variant<Wildcard, Comparison, Interval, EnumEq>;

inline std::string_view CompareOpText(CompareOp op) {
  switch (op) {
    case CompareOp::kLess: return "<";
    case CompareOp::kLessEqual: return "<=";
    case CompareOp::kGreater: return ">";
    case CompareOp::kGreaterEqual: return ">=";
    case CompareOp::kEqual: return "=";
  }
  return "?";
}

namespace detail {

class ExprScanner {
 public:
  ExprScanner(std::string_view text, std::size_t base_offset)
      : text_(text), base_(base_offset) {}

  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool AtEnd() {
    SkipSpace();
    return pos_ >= text_.size();
  }

  char Peek() {
    SkipSpace();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool Consume(std::string_view token) {
    SkipSpace();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  std::size_t offset() const { return base_ + pos_; }

  [[noreturn]] void Fail(const std::string& what) const {
    throw Error(ErrorKind::kParse,
                "syntax error at offset " + std::to_string(offset()) + ": " + what);
  }

  struct Number {
    double value;
    bool integral;
  };

  // Decimal literal: [+-]digits[.digits][(e|E)[+-]digits]. A '.' not followed
  // by a digit ends the literal so that "100..200" scans as two numbers.
  Number ScanNumber() {
    SkipSpace();
    const std::size_t start = pos_;
    auto digit_at = [&](std::size_t i) {
      return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
    };
    std::size_t i = pos_;
    if (i < text_.size() && (text_[i] == '+' || text_[i] == '-')) ++i;
    if (!digit_at(i)) Fail("expected a number");
    while (digit_at(i)) ++i;
    bool integral = true;
    if (i < text_.size() && text_[i] == '.' && digit_at(i + 1)) {
      integral = false;
      ++i;
      while (digit_at(i)) ++i;
    }
    if (i < text_.size() && (text_[i] == 'e' || text_[i] == 'E')) {
      std::size_t j = i + 1;
      if (j < text_.size() && (text_[j] == '+' || text_[j] == '-')) ++j;
      if (digit_at(j)) {
        integral = false;
        i = j;
        while (digit_at(i)) ++i;
      }
    }
    std::string_view token = text_.substr(start, i - start);
    if (token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
      Fail("number out of range");
    }
    pos_ = i;
    return {v, integral};
  }

 private:
  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

inline void ValidateInterval(const Interval& iv) {
  const bool ok = iv.lo < iv.hi || (iv.lo == iv.hi && iv.lo_closed && iv.hi_closed);
  if (!ok) {
    throw Error(ErrorKind::kValidation,
                "reversed or empty interval: lower bound must be below upper bound");
  }
}

}  // namespace detail

// `base_offset` is added to reported character offsets, which lets table
// parsing point into the whole line.
inline CellExpr ParseExpr(std::string_view text, std::size_t base_offset = 0) {
  detail::ExprScanner s(text, base_offset);
  if (s.AtEnd()) s.Fail("empty expression");

  if (Trim(text) == "-") return Wildcard{};

  CellExpr result;
  const char c = s.Peek();

  if (c == '[' || c == '(') {
    Interval iv;
    iv.lo_closed = s.Consume("[");
    if (!iv.lo_closed) s.Consume("(");
    iv.lo = s.ScanNumber().value;
    if (!s.Consume("..")) s.Fail("expected '..'");
    iv.hi = s.ScanNumber().value;
    if (s.Consume("]")) {
      iv.hi_closed = true;
    } else if (s.Consume(")")) {
      iv.hi_closed = false;
    } else {
      s.Fail("expected ']' or ')'");
    }
    detail::ValidateInterval(iv);
    result = iv;
  } else if (c == '<' || c == '>' || c == '=') {
    Comparison cmp;
    if (s.Consume("<=")) {
      cmp.op = CompareOp::kLessEqual;
    } else if (s.Consume(">=")) {
      cmp.op = CompareOp::kGreaterEqual;
    } else if (s.Consume("<")) {
      cmp.op = CompareOp::kLess;
    } else if (s.Consume(">")) {
      cmp.op = CompareOp::kGreater;
    } else {
      s.Consume("=");
      cmp.op = CompareOp::kEqual;
    }
    cmp.value = s.ScanNumber().value;
    result = cmp;
  } else {
    const auto num = s.ScanNumber();
    if (!num.integral) s.Fail("a bare value must be an integer category code");
    if (std::fabs(num.value) > 9.0e15) s.Fail("category code out of range");
    result = EnumEq{static_cast<long long>(num.value)};
  }
  if (!s.AtEnd()) s.Fail("unexpected trailing input");
  return result;
}

inline std::string PrintExpr(const CellExpr& e) {
  struct Printer {
    std::string operator()(const Wildcard&) const { return "-"; }
    std::string operator()(const Comparison& c) const {
      return std::string(CompareOpText(c.op)) + " " + FormatDouble(c.value);
    }
    std::string operator()(const Interval& iv) const {
      return std::string(iv.lo_closed ? "[" : "(") + FormatDouble(iv.lo) + ".." +
             FormatDouble(iv.hi) + (iv.hi_closed ? "]" : ")");
    }
    std::string operator()(const EnumEq& e) const { return std::to_string(e.value); }
  };
  return std::visit(Printer{}, e);
}

inline bool Matches(const CellExpr& e, double v) {
  struct Matcher {
    double v;
    bool operator()(const Wildcard&) const { return true; }
    bool operator()(const Comparison& c) const {
      switch (c.op) {
        case CompareOp::kLess: return v < c.value;
        case CompareOp::kLessEqual: return v <= c.value;
        case CompareOp::kGreater: return v > c.value;
        case CompareOp::kGreaterEqual: return v >= c.value;
        case CompareOp::kEqual: return v == c.value;
      }
      return false;
    }
    bool operator()(const Interval& iv) const {
      const bool above = iv.lo_closed ? v >= iv.lo : v > iv.lo;
      const bool below = iv.hi_closed ? v <= iv.hi : v < iv.hi;
      return above && below;
    }
    bool operator()(const EnumEq& e) const {
      return v == static_cast<double>(e.value);
    }
  };
  return std::visit(Matcher{v}, e);
}

enum class RiskLevel { kLow, kMedium, kHigh };

inline constexpr std::string_view RiskLevelName(RiskLevel r) {
  switch (r) {
    case RiskLevel::kLow: return "LOW";
    case RiskLevel::kMedium: return "MEDIUM";
    case RiskLevel::kHigh: return "HIGH";
  }
  return "?";
}

inline std::optional<RiskLevel> FindRiskLevel(std::string_view s) {
  if (s == "LOW") return RiskLevel::kLow;
  if (s == "MEDIUM") return RiskLevel::kMedium;
  if (s == "HIGH") return RiskLevel::kHigh;
  return std::nullopt;
}

enum class HitPolicy { kUnique, kFirst, kPriority };

inline constexpr std::string_view HitPolicyName(HitPolicy h) {
  switch (h) {
    case HitPolicy::kUnique: return "UNIQUE";
    case HitPolicy::kFirst: return "FIRST";
    case HitPolicy::kPriority: return "PRIORITY";
  }
  return "?";
}

struct RuleRow {
  std::vector<CellExpr> cells;
  RiskLevel output = RiskLevel::kLow;
  std::string annotation;

  friend bool operator==(const RuleRow&, const RuleRow&) = default;
};

struct DecisionTable {
  std::string name;
  std::vector<Feature> inputs;
  HitPolicy hit_policy = HitPolicy::kFirst;
  std::vector<RiskLevel> priority_order;  // highest first; PRIORITY only
  std::vector<RuleRow> rows;
  std::vector<std::string> history;  // applied revisions, oldest first

  friend bool operator==(const DecisionTable&, const DecisionTable&) = default;
};

struct TableDecision {
  std::optional<RiskLevel> outcome;  // nullopt = no match
  std::vector<std::size_t> matched_rows;
  std::vector<std::vector<bool>> trace;  // [row][cell]
};

namespace detail {

inline Error TableError(std::size_t line, std::size_t column, const std::string& what) {
  return Error(ErrorKind::kParse, "line " + std::to_string(line) + ", column " +
                                      std::to_string(column) + ": " + what);
}

inline bool IsIdentifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
    return false;
  }
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

inline std::size_t ColumnOf(std::string_view line, std::string_view part) {
  return static_cast<std::size_t>(part.data() - line.data()) + 1;
}

}  // namespace detail

inline DecisionTable ParseTable(std::string_view doc) {
  DecisionTable table;
  bool have_header = false;
  bool have_inputs = false;
  bool have_priority = false;
  std::size_t line_no = 0;

  for (std::string_view raw : SplitOn(doc, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());

    if (!have_header) {
      std::istringstream words{std::string(line)};
      std::string kw_table, name, kw_hit, policy, extra;
      words >> kw_table >> name >> kw_hit >> policy;
      if (kw_table != "table" || kw_hit != "hit" || (words >> extra)) {
        throw detail::TableError(line_no, indent + 1,
                                 "expected 'table <name> hit <policy>'");
      }
      if (!detail::IsIdentifier(name)) {
        throw detail::TableError(line_no, indent + 7, "invalid table name '" + name + "'");
      }
      table.name = name;
      if (policy == "UNIQUE") {
        table.hit_policy = HitPolicy::kUnique;
      } else if (policy == "FIRST") {
        table.hit_policy = HitPolicy::kFirst;
      } else if (policy == "PRIORITY") {
        table.hit_policy = HitPolicy::kPriority;
      } else {
        throw detail::TableError(line_no, indent + 1,
                                 "unknown hit policy '" + policy + "'");
      }
      have_header = true;
      continue;
    }

    if (line.starts_with("inputs:")) {
      if (have_inputs) throw detail::TableError(line_no, 1, "duplicate inputs line");
      const auto names = SplitOn(line.substr(7), ',');
      for (std::size_t k = 0; k < names.size(); ++k) {
        const auto name = Trim(names[k]);
        const std::size_t col = detail::ColumnOf(raw, name);
        const auto f = FindFeature(name);
        if (!f) {
          throw detail::TableError(line_no, col,
                                   "unknown feature '" + std::string(name) + "'");
        }
        if (std::find(table.inputs.begin(), table.inputs.end(), *f) != table.inputs.end()) {
          throw detail::TableError(line_no, col,
                                   "duplicate input '" + std::string(name) + "'");
        }
        table.inputs.push_back(*f);
      }
      have_inputs = true;
      continue;
    }

    if (line.starts_with("priority:")) {
      if (have_priority) throw detail::TableError(line_no, 1, "duplicate priority line");
      for (auto part : SplitOn(line.substr(9), '>')) {
        const auto level = FindRiskLevel(Trim(part));
        if (!level) {
          throw detail::TableError(line_no, detail::ColumnOf(raw, part),
                                   "unknown risk level '" + std::string(Trim(part)) + "'");
        }
        if (std::find(table.priority_order.begin(), table.priority_order.end(), *level) !=
            table.priority_order.end()) {
          throw detail::TableError(line_no, detail::ColumnOf(raw, part),
                                   "risk level listed twice in priority order");
        }
        table.priority_order.push_back(*level);
      }
      have_priority = true;
      continue;
    }

    if (line.starts_with("history:")) {
      table.history.emplace_back(Trim(line.substr(8)));
      continue;
    }

    if (line.front() != '|') {
      throw detail::TableError(line_no, indent + 1, "unrecognized line");
    }
    if (!have_inputs) {
      throw detail::TableError(line_no, indent + 1, "rule row before inputs line");
    }

    RuleRow row;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      row.annotation = std::string(Trim(body.substr(hash + 1)));
      body = body.substr(0, hash);
    }
    const auto arrow = body.rfind("->");
    if (arrow == std::string_view::npos) {
      throw detail::TableError(line_no, indent + 1, "missing '-> <OUTPUT>'");
    }
    const auto out_text = Trim(body.substr(arrow + 2));
    const auto out = FindRiskLevel(out_text);
    if (!out) {
      throw detail::TableError(line_no, detail::ColumnOf(raw, body.substr(arrow + 2)),
                               "unknown output '" + std::string(out_text) + "'");
    }
    row.output = *out;

    std::string_view cells_text = Trim(body.substr(0, arrow));
    cells_text.remove_prefix(1);  // leading '|'
    auto parts = SplitOn(cells_text, '|');
    if (parts.size() > 1 && Trim(parts.back()).empty()) parts.pop_back();
    if (parts.size() != table.inputs.size()) {
      throw detail::TableError(line_no, indent + 1,
                               "row has " + std::to_string(parts.size()) +
                                   " cells but table declares " +
                                   std::to_string(table.inputs.size()) + " inputs");
    }
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const std::size_t col = detail::ColumnOf(raw, parts[k]);
      CellExpr cell;
      try {
        cell = ParseExpr(parts[k], col - 1);
      } catch (const Error& e) {
        throw Error(e.kind(), "line " + std::to_string(line_no) + ", cell " +
                                  std::to_string(k + 1) + ": " + e.what());
      }
      if (const auto* en = std::get_if<EnumEq>(&cell);
          en && table.inputs[k] == Feature::kGender && en->value != 0 && en->value != 1) {
        throw detail::TableError(line_no, col, "gender category must be 0 or 1");
      }
      row.cells.push_back(cell);
    }
    table.rows.push_back(std::move(row));
  }

  if (!have_header) throw detail::TableError(line_no, 1, "missing table header");
  if (!have_inputs || table.inputs.empty()) {
    throw detail::TableError(line_no, 1, "table declares no inputs");
  }
  if (table.rows.empty()) throw detail::TableError(line_no, 1, "table has no rows");
  if (table.hit_policy == HitPolicy::kPriority) {
    if (table.priority_order.size() != 3) {
      throw detail::TableError(line_no, 1,
                               "PRIORITY table must order all of HIGH, MEDIUM and LOW");
    }
  } else if (have_priority) {
    throw detail::TableError(line_no, 1, "priority line is only valid for PRIORITY tables");
  }
  return table;
}

inline std::string PrintTable(const DecisionTable& table) {
  std::string out = "table " + table.name + " hit " +
                    std::string(HitPolicyName(table.hit_policy)) + "\ninputs: ";
  for (std::size_t k = 0; k < table.inputs.size(); ++k) {
    if (k > 0) out += ", ";
    out += FeatureName(table.inputs[k]);
  }
  out += '\n';
  if (table.hit_policy == HitPolicy::kPriority) {
    out += "priority: ";
    for (std::size_t k = 0; k < table.priority_order.size(); ++k) {
      if (k > 0) out += " > ";
      out += RiskLevelName(table.priority_order[k]);
    }
    out += '\n';
  }
  for (const auto& h : table.history) out += "history: " + h + '\n';
  for (const auto& row : table.rows) {
    out += '|';
    for (const auto& cell : row.cells) out += ' ' + PrintExpr(cell) + " |";
    out += " -> ";
    out += RiskLevelName(row.output);
    if (!row.annotation.empty()) out += " # " + row.annotation;
    out += '\n';
  }
  return out;
}

inline TableDecision Evaluate(const DecisionTable& table, const PatientFeatures& p) {
  for (Feature f : table.inputs) {
    if (!std::isfinite(p[f])) {
      throw Error(ErrorKind::kValidation,
                  "input '" + std::string(FeatureName(f)) + "' is missing or non-finite",
                  std::string(FeatureName(f)));
    }
  }
  TableDecision d;
  d.trace.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<bool> cell_hits(row.cells.size());
    bool all = true;
    for (std::size_t k = 0; k < row.cells.size(); ++k) {
      cell_hits[k] = Matches(row.cells[k], p[table.inputs[k]]);
      all = all && cell_hits[k];
    }
    d.trace.push_back(std::move(cell_hits));
    if (all) d.matched_rows.push_back(r);
  }
  if (d.matched_rows.empty()) return d;

  switch (table.hit_policy) {
    case HitPolicy::kUnique:
      if (d.matched_rows.size() > 1) {
        std::string rows;
        for (std::size_t i = 0; i < d.matched_rows.size(); ++i) {
          rows += (i ? ", " : "") + std::to_string(d.matched_rows[i]);
        }
        throw Error(ErrorKind::kAmbiguous,
                    "UNIQUE table '" + table.name + "' matched rows " + rows);
      }
      d.outcome = table.rows[d.matched_rows.front()].output;
      break;
    case HitPolicy::kFirst:
      d.outcome = table.rows[d.matched_rows.front()].output;
      break;
    case HitPolicy::kPriority: {
      auto rank = [&](RiskLevel level) {
        return std::find(table.priority_order.begin(), table.priority_order.end(), level) -
               table.priority_order.begin();
      };
      RiskLevel best = table.rows[d.matched_rows.front()].output;
      for (std::size_t r : d.matched_rows) {
        if (rank(table.rows[r].output) < rank(best)) best = table.rows[r].output;
      }
      d.outcome = best;
      break;
    }
  }
  return d;
}

}  // namespace twinscope
