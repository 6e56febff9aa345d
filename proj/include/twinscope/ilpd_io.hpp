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

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/text.hpp"

namespace twinscope {

// How the UCI selector column maps to the risk label. The UCI encoding is
// selector 1 = liver patient, selector 2 = not.
enum class LabelPolarity {
  kStandard,    // selector 1 -> risk 1
  kPaperTable,  // selector 1 -> risk 0
};

inline constexpr std::string_view kCanonicalHeader =
    "age,gender,total_bilirubin,direct_bilirubin,alp,alt,ast,total_proteins,"
    "albumin,ag_ratio,risk";

// A record whose direct bilirubin exceeds its total bilirubin. Such rows are
// kept; the loader only reports them.
struct LoadWarning {
  std::size_t row = 0;
  std::string message;
};

struct LoadResult {
  Dataset dataset;
  std::vector<LoadWarning> warnings;
};

namespace detail {

inline std::vector<std::string> ReadLines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && Trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

inline Error RowError(std::size_t row, const std::string& what) {
  return Error(ErrorKind::kParse, "row " + std::to_string(row) + ": " + what);
}

inline double ParseCell(std::string_view cell, std::size_t row,
                        std::size_t column, bool allow_missing) {
  if (Trim(cell).empty()) {
    if (allow_missing) return kMissing;
    throw RowError(row, "empty value in column " +
                            std::string(kFeatureNames[column]));
  }
  const auto v = ParseDouble(cell);
  if (!v || !std::isfinite(*v)) {
    throw RowError(row, "non-numeric value '" + std::string(Trim(cell)) +
                            "' in column " + std::string(kFeatureNames[column]));
  }
  if (*v < 0.0) {
    throw RowError(row, "negative value in column " +
                            std::string(kFeatureNames[column]));
  }
  return *v;
}

inline bool LooksLikeHeader(std::string_view line) {
  const auto first = Trim(SplitOn(line, ',').front());
  return !first.empty() && std::isalpha(static_cast<unsigned char>(first.front()));
}

inline void CheckBilirubin(const PatientFeatures& p, std::size_t row,
                           std::vector<LoadWarning>& warnings) {
  if (p[Feature::kDirectBilirubin] > p[Feature::kTotalBilirubin]) {
    warnings.push_back({row, "direct_bilirubin exceeds total_bilirubin"});
  }
}

}  // namespace detail

// Parses the UCI ILPD layout: no header, 11 columns, gender as Female/Male,
// selector in {1, 2}, blank A/G ratio allowed. Rows are numbered from 1.
inline LoadResult ParseIlpd(std::istream& in, LabelPolarity polarity) {
  auto lines = detail::ReadLines(in);
  std::size_t first = 0;
  if (!lines.empty() && detail::LooksLikeHeader(lines.front())) first = 1;

  LoadResult result;
  std::vector<LabeledRecord> records;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const std::size_t row = i + 1;
    if (Trim(lines[i]).empty()) continue;
    const auto cells = SplitOn(lines[i], ',');
    if (cells.size() != kNumFeatures + 1) {
      throw detail::RowError(row, "expected 11 columns, found " +
                                      std::to_string(cells.size()));
    }
    LabeledRecord rec;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      if (FeatureAt(j) == Feature::kGender) {
        const auto g = Trim(cells[j]);
        if (g == "Female") {
          rec.features.values[j] = 0.0;
        } else if (g == "Male") {
          rec.features.values[j] = 1.0;
        } else {
          throw detail::RowError(row, "unknown gender '" + std::string(g) + "'");
        }
        continue;
      }
      rec.features.values[j] = detail::ParseCell(
          cells[j], row, j, FeatureAt(j) == Feature::kAgRatio);
    }
    const auto selector = ParseInt(cells[kNumFeatures]);
    if (!selector || (*selector != 1 && *selector != 2)) {
      throw detail::RowError(row, "selector must be 1 or 2");
    }
    const bool diagnosed = *selector == 1;
    rec.risk = (polarity == LabelPolarity::kStandard) == diagnosed ? 1 : 0;
    detail::CheckBilirubin(rec.features, row, result.warnings);
    records.push_back(rec);
  }
  if (records.empty()) throw Error(ErrorKind::kParse, "no records");
  result.dataset = Dataset::FromRecords(std::move(records));
  return result;
}

inline LoadResult LoadIlpd(const std::string& path, LabelPolarity polarity) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return ParseIlpd(in, polarity);
}

// Writes records back in the UCI layout. Risk is mapped to the selector with
// the given polarity, so WriteIlpd followed by ParseIlpd is lossless.
inline void WriteIlpd(std::ostream& out, const Dataset& ds,
                      LabelPolarity polarity) {
  for (const auto& r : ds.records) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      const double v = r.features.values[j];
      if (FeatureAt(j) == Feature::kGender) {
        out << (v == 1.0 ? "Male" : "Female");
      } else if (!std::isnan(v)) {
        out << FormatDouble(v);
      }
      out << ',';
    }
    const bool diagnosed = (polarity == LabelPolarity::kStandard) == (r.risk == 1);
    out << (diagnosed ? 1 : 2) << '\n';
  }
}

// Canonical dataset file: header row, numeric gender, shortest round-trip
// decimals, empty cell for a missing value.
inline void WriteCanonical(std::ostream& out, const Dataset& ds) {
  out << kCanonicalHeader << '\n';
  for (const auto& r : ds.records) {
    for (double v : r.features.values) {
      if (!std::isnan(v)) out << FormatDouble(v);
      out << ',';
    }
    out << r.risk << '\n';
  }
}

inline LoadResult ParseCanonical(std::istream& in) {
  auto lines = detail::ReadLines(in);
  if (lines.empty() || Trim(lines.front()) != kCanonicalHeader) {
    throw Error(ErrorKind::kParse, "row 1: missing canonical header");
  }
  LoadResult result;
  std::vector<LabeledRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t row = i + 1;
    if (Trim(lines[i]).empty()) continue;
    const auto cells = SplitOn(lines[i], ',');
    if (cells.size() != kNumFeatures + 1) {
      throw detail::RowError(row, "expected 11 columns, found " +
                                      std::to_string(cells.size()));
    }
    LabeledRecord rec;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      rec.features.values[j] = detail::ParseCell(
          cells[j], row, j, FeatureAt(j) == Feature::kAgRatio);
    }
    const double g = rec.features[Feature::kGender];
    if (g != 0.0 && g != 1.0) throw detail::RowError(row, "gender must be 0 or 1");
    const auto risk = ParseInt(cells[kNumFeatures]);
    if (!risk || (*risk != 0 && *risk != 1)) {
      throw detail::RowError(row, "risk must be 0 or 1");
    }
    rec.risk = static_cast<int>(*risk);
    detail::CheckBilirubin(rec.features, row, result.warnings);
    records.push_back(rec);
  }
  if (records.empty()) throw Error(ErrorKind::kParse, "no records");
  result.dataset = Dataset::FromRecords(std::move(records));
  return result;
}

// Reads either layout: a file whose first line is the canonical header is
// canonical, anything else is treated as UCI ILPD.
inline LoadResult LoadAny(const std::string& path, LabelPolarity polarity) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string first;
  std::getline(in, first);
  in.clear();
  in.seekg(0);
  if (Trim(first) == kCanonicalHeader) return ParseCanonical(in);
  return ParseIlpd(in, polarity);
}

}  // namespace twinscope
