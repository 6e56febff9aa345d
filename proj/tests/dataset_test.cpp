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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "twinscope/ilpd_io.hpp"
#include "twinscope/synth.hpp"
#include "twinscope/text.hpp"

namespace ts = twinscope;

namespace {

ts::LoadResult ParseText(const std::string& text,
                         ts::LabelPolarity polarity = ts::LabelPolarity::kStandard) {
  std::istringstream in(text);
  return ts::ParseIlpd(in, polarity);
}

ts::ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const ts::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ts::ErrorKind::kIo;
}

std::string MessageOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const ts::Error& e) {
    return e.what();
  }
  return "";
}

ts::Dataset Fallback() {
  return ts::LoadIlpd(std::string(TWINSCOPE_SOURCE_DIR) + "/data/ilpd_fallback.csv",
                      ts::LabelPolarity::kStandard)
      .dataset;
}

ts::LabeledRecord Rec(double ag, int risk) {
  ts::LabeledRecord r;
  r.features = oracle::Row0();
  r.features[ts::Feature::kAgRatio] = ag;
  r.risk = risk;
  return r;
}

}  // namespace

TEST(LoadIlpd, FirstUciRowBothPolarities) {
  const std::string row = "65,Female,0.7,0.1,187,16,18,6.8,3.3,0.9,1\n";
  const auto standard = ParseText(row).dataset;
  ASSERT_EQ(standard.size(), 1u);
  EXPECT_EQ(standard.records[0].features, oracle::Row0());
  EXPECT_EQ(standard.records[0].risk, 1);
  const auto flipped = ParseText(row, ts::LabelPolarity::kPaperTable).dataset;
  EXPECT_EQ(flipped.records[0].risk, 0);
}

TEST(LoadIlpd, GenderAndSelectorMapping) {
  const auto ds = ParseText("40,Male,1,0.5,100,20,20,7,3,1,2\n40,Female,1,0.5,100,20,20,7,3,1,1\n").dataset;
  EXPECT_EQ(ds.records[0].features[ts::Feature::kGender], 1.0);
  EXPECT_EQ(ds.records[0].risk, 0);
  EXPECT_EQ(ds.records[1].features[ts::Feature::kGender], 0.0);
  EXPECT_EQ(ds.records[1].risk, 1);
}

TEST(LoadIlpd, EmptyInputHasNoRecords) {
  EXPECT_EQ(KindOf([] { ParseText(""); }), ts::ErrorKind::kParse);
  EXPECT_EQ(MessageOf([] { ParseText("\n\n"); }), "no records");
}

TEST(LoadIlpd, MalformedRowsNameTheRow) {
  const std::string good = "65,Female,0.7,0.1,187,16,18,6.8,3.3,0.9,1\n";
  EXPECT_NE(MessageOf([&] { ParseText(good + "65,Female,0.7\n"); }).find("row 2"),
            std::string::npos);
  EXPECT_NE(MessageOf([&] { ParseText(good + good + "65,Female,x,0.1,187,16,18,6.8,3.3,0.9,1\n"); })
                .find("row 3"),
            std::string::npos);
  EXPECT_NE(MessageOf([&] { ParseText("65,Other,0.7,0.1,187,16,18,6.8,3.3,0.9,1\n"); })
                .find("unknown gender"),
            std::string::npos);
  EXPECT_EQ(KindOf([&] { ParseText("65,Male,0.7,0.1,187,16,18,6.8,3.3,0.9,3\n"); }),
            ts::ErrorKind::kParse);
  EXPECT_EQ(KindOf([&] { ParseText("65,Male,0.7,0.1,187,,18,6.8,3.3,0.9,1\n"); }),
            ts::ErrorKind::kParse);
}

TEST(LoadIlpd, MissingAgRatioIsKept) {
  const auto ds = ParseText("65,Female,0.7,0.1,187,16,18,6.8,3.3,,1\n").dataset;
  EXPECT_TRUE(ds.records[0].features.IsMissing(ts::Feature::kAgRatio));
  EXPECT_EQ(ds.CountMissing(), 1u);
}

TEST(LoadIlpd, BilirubinInversionWarnsOnly) {
  const auto res = ParseText("65,Female,0.7,0.9,187,16,18,6.8,3.3,0.9,1\n");
  EXPECT_EQ(res.dataset.size(), 1u);
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_EQ(res.warnings[0].row, 1u);
}

TEST(LoadIlpd, BundledFileShape) {
  // Counts taken straight from the text, independent of the parser.
  const std::string path = std::string(TWINSCOPE_SOURCE_DIR) + "/data/ilpd_fallback.csv";
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0, blank_ag = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 11 && cells[9].empty()) ++blank_ag;
  }
  const auto ds = Fallback();
  EXPECT_EQ(ds.size(), rows);
  EXPECT_EQ(ds.size(), 583u);
  EXPECT_EQ(ds.CountMissing(), blank_ag);
  EXPECT_EQ(blank_ag, 4u);
}

TEST(Stats, MatchTwoPassOracle) {
  const auto ds = Fallback();
  for (std::size_t j = 0; j < ts::kNumFeatures; ++j) {
    const auto [mean, sd] = oracle::MeanStd(oracle::Column(ds, ts::FeatureAt(j)));
    EXPECT_NEAR(ds.stats[j].mean, mean, 1e-9 * std::max(1.0, std::fabs(mean)));
    EXPECT_NEAR(ds.stats[j].std, sd, 1e-9 * std::max(1.0, sd));
    EXPECT_DOUBLE_EQ(ds.stats[j].median, oracle::Median(oracle::Column(ds, ts::FeatureAt(j))));
    EXPECT_GT(ds.stats[j].std, 0.0);
  }
}

TEST(Stats, RandomDataMatchOracle) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-50.0, 1e4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ts::LabeledRecord> recs(1 + gen() % 200);
    for (auto& r : recs) {
      for (auto& v : r.features.values) v = u(gen);
    }
    const auto ds = ts::Dataset::FromRecords(recs);
    for (std::size_t j = 0; j < ts::kNumFeatures; ++j) {
      const auto [mean, sd] = oracle::MeanStd(oracle::Column(ds, ts::FeatureAt(j)));
      EXPECT_NEAR(ds.stats[j].mean, mean, 1e-9 * std::fabs(mean));
      EXPECT_NEAR(ds.stats[j].std, sd, 1e-9 * std::max(sd, 1e-300));
    }
  }
}

TEST(Impute, NoMissingIsIdentity) {
  const auto ds = ts::Dataset::FromRecords({Rec(0.5, 1), Rec(1.5, 0)});
  EXPECT_EQ(ts::Impute(ds).records, ds.records);
}

TEST(Impute, MedianOfTwoIsMidpoint) {
  const auto ds = ts::Dataset::FromRecords({Rec(0.5, 1), Rec(ts::kMissing, 0), Rec(1.5, 1)});
  const auto out = ts::Impute(ds);
  EXPECT_EQ(out.records[1].features[ts::Feature::kAgRatio], 1.0);
  EXPECT_EQ(out.records[0].features, ds.records[0].features);
  EXPECT_EQ(out.records[2].features, ds.records[2].features);
}

TEST(Impute, BundledFileUsesTrainingMedian) {
  const auto raw = Fallback();
  const auto split = ts::Split(raw, {0.8, 42, true});
  const double median = oracle::Median(oracle::Column(split.train, ts::Feature::kAgRatio));
  std::size_t imputed = 0;
  for (const auto* part : {&split.train, &split.test}) {
    const auto out = ts::Impute(*part);
    for (std::size_t i = 0; i < part->size(); ++i) {
      if (part->records[i].features.IsMissing(ts::Feature::kAgRatio)) {
        ++imputed;
        EXPECT_EQ(out.records[i].features[ts::Feature::kAgRatio], median);
      }
    }
    EXPECT_EQ(out.CountMissing(), 0u);
  }
  EXPECT_EQ(imputed, 4u);
}

TEST(Impute, Idempotent) {
  const auto ds = ts::Split(Fallback(), {0.8, 3, true}).test;
  const auto once = ts::Impute(ds);
  EXPECT_EQ(ts::Impute(once).records, once.records);
}

TEST(Split, Ilpd80_20Sizes) {
  const auto raw = Fallback();
  const auto s = ts::Split(raw, {0.8, 42, true});
  EXPECT_EQ(s.train.size(), 466u);
  EXPECT_EQ(s.test.size(), 117u);
}

TEST(Split, ExactStratification) {
  std::vector<ts::LabeledRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(Rec(1.0 + i, i % 2));
  const auto s = ts::Split(ts::Dataset::FromRecords(recs), {0.8, 5, true});
  EXPECT_EQ(s.train.CountPositive(), 4u);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.CountPositive(), 1u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, PartitionAndDeterminism) {
  const auto raw = Fallback();
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 999ull}) {
    for (bool strat : {true, false}) {
      const auto a = ts::Split(raw, {0.8, seed, strat});
      const auto b = ts::Split(raw, {0.8, seed, strat});
      EXPECT_EQ(a.train.records, b.train.records);
      EXPECT_EQ(a.test.records, b.test.records);
      // Every record lands on exactly one side; ag_ratio plus age plus alp
      // identify rows well enough to count multiset equality by sorting.
      auto key = [](const ts::LabeledRecord& r) {
        std::vector<double> k(r.features.values.begin(), r.features.values.end());
        for (auto& v : k) v = std::isnan(v) ? -1.0 : v;
        k.push_back(r.risk);
        return k;
      };
      std::vector<std::vector<double>> all, parts;
      for (const auto& r : raw.records) all.push_back(key(r));
      for (const auto& r : a.train.records) parts.push_back(key(r));
      for (const auto& r : a.test.records) parts.push_back(key(r));
      std::sort(all.begin(), all.end());
      std::sort(parts.begin(), parts.end());
      EXPECT_EQ(all, parts);
      if (strat) {
        const double share = static_cast<double>(raw.CountPositive()) * 0.8;
        EXPECT_LE(std::fabs(static_cast<double>(a.train.CountPositive()) - share), 1.0);
        const double neg_share = static_cast<double>(raw.size() - raw.CountPositive()) * 0.8;
        EXPECT_LE(std::fabs(static_cast<double>(a.train.size() - a.train.CountPositive()) -
                            neg_share),
                  1.0);
      }
      // Stats come from the training half only.
      EXPECT_EQ(a.test.stats, a.train.stats);
      EXPECT_EQ(a.train.stats, ts::ComputeStats(a.train.records));
    }
  }
}

TEST(Split, StatsFollowTheSeed) {
  const auto raw = Fallback();
  EXPECT_NE(ts::Split(raw, {0.8, 1, true}).train.stats,
            ts::Split(raw, {0.8, 2, true}).train.stats);
}

TEST(Split, EmptySideRejected) {
  const auto ds = ts::Dataset::FromRecords({Rec(1, 0), Rec(2, 1)});
  EXPECT_EQ(KindOf([&] { ts::Split(ds, {0.1, 0, false}); }), ts::ErrorKind::kValidation);
  EXPECT_EQ(KindOf([&] { ts::Split(ds, {1.0, 0, true}); }), ts::ErrorKind::kValidation);
  EXPECT_EQ(KindOf([&] { ts::Split(ts::Dataset{}, {0.5, 0, true}); }),
            ts::ErrorKind::kValidation);
}

TEST(Rng, PlatformIndependentStream) {
  // The 10000th draw of mt19937_64 with its default seed, as fixed by the
  // C++ standard.
  ts::Rng rng(5489u);
  for (int i = 0; i < 9999; ++i) rng.NextU64();
  EXPECT_EQ(rng.NextU64(), 9981545732273789042ull);
}

TEST(Synth, NoiseFreeFollowsRule) {
  const auto ds = ts::SynthGenerate(1000, ts::ParseThresholdRule("alp>175"), 0.0, 7);
  for (const auto& r : ds.records) {
    EXPECT_EQ(r.risk, r.features[ts::Feature::kAlp] > 175 ? 1 : 0);
  }
}

TEST(Synth, NoiseBounds) {
  EXPECT_EQ(KindOf([] { ts::SynthGenerate(10, {}, 0.5, 1); }), ts::ErrorKind::kValidation);
  EXPECT_EQ(KindOf([] { ts::SynthGenerate(10, {}, -0.1, 1); }), ts::ErrorKind::kValidation);
  EXPECT_EQ(KindOf([] { ts::ParseThresholdRule("cholesterol>5"); }),
            ts::ErrorKind::kValidation);
}

TEST(Synth, FlipCountNearExpectation) {
  const auto ds = ts::SynthGenerate(1000, ts::ParseThresholdRule("alp>175"), 0.1, 7);
  std::size_t flips = 0;
  for (const auto& r : ds.records) flips += r.risk != (r.features[ts::Feature::kAlp] > 175);
  EXPECT_NEAR(static_cast<double>(flips), 100.0, 30.0);
}

TEST(Synth, DeterministicAndInRange) {
  const auto a = ts::SynthGenerate(500, ts::ParseThresholdRule("alt > 60"), 0.05, 3);
  const auto b = ts::SynthGenerate(500, ts::ParseThresholdRule("alt > 60"), 0.05, 3);
  EXPECT_EQ(a.records, b.records);
  for (const auto& r : a.records) {
    EXPECT_FALSE(r.features.HasMissing());
    EXPECT_LE(r.features[ts::Feature::kDirectBilirubin], r.features[ts::Feature::kTotalBilirubin]);
    for (std::size_t j = 0; j < ts::kNumFeatures; ++j) EXPECT_GE(r.features.values[j], 0.0);
  }
}

TEST(Synth, IlpdLikeShape) {
  const auto ds = ts::SynthIlpdLike(1);
  EXPECT_EQ(ds.size(), 583u);
  EXPECT_EQ(ds.CountPositive(), 416u);
  EXPECT_EQ(ds.CountMissing(), 4u);
  for (const auto& r : ds.records) {
    EXPECT_LE(r.features[ts::Feature::kDirectBilirubin], r.features[ts::Feature::kTotalBilirubin]);
  }
}

TEST(RoundTrip, UciLayoutReproducesValues) {
  const auto ds = Fallback();
  std::ostringstream out;
  ts::WriteIlpd(out, ds, ts::LabelPolarity::kStandard);
  const auto back = ParseText(out.str()).dataset;
  EXPECT_EQ(back.records, ds.records);
  // Byte-identical to the bundled text.
  std::ifstream in(std::string(TWINSCOPE_SOURCE_DIR) + "/data/ilpd_fallback.csv");
  std::stringstream original;
  original << in.rdbuf();
  EXPECT_EQ(out.str(), original.str());
}

TEST(RoundTrip, CanonicalLayout) {
  const auto ds = ts::SynthGenerate(300, ts::ParseThresholdRule("alp>175"), 0.1, 9);
  std::ostringstream out;
  ts::WriteCanonical(out, ds);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), std::string(ts::kCanonicalHeader));
  std::istringstream in(out.str());
  EXPECT_EQ(ts::ParseCanonical(in).dataset.records, ds.records);
}

TEST(RoundTrip, PaperTablePolarity) {
  const auto ds = Fallback();
  std::ostringstream out;
  ts::WriteIlpd(out, ds, ts::LabelPolarity::kPaperTable);
  EXPECT_EQ(ParseText(out.str(), ts::LabelPolarity::kPaperTable).dataset.records, ds.records);
}

TEST(Text, ShortestDecimal) {
  EXPECT_EQ(ts::FormatDouble(0.1), "0.1");
  EXPECT_EQ(ts::FormatDouble(187), "187");
  EXPECT_EQ(*ts::ParseDouble(" 2.5 "), 2.5);
  EXPECT_FALSE(ts::ParseDouble("2.5x"));
  EXPECT_FALSE(ts::ParseDouble(""));
}
