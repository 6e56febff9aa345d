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
#include <random>

#include "oracles.hpp"
#include "twinscope/ilpd_io.hpp"
#include "twinscope/model_io.hpp"

namespace ts = twinscope;
namespace fs = std::filesystem;

namespace {

ts::Dataset FallbackTrain() {
  const auto raw = ts::LoadIlpd(std::string(TWINSCOPE_SOURCE_DIR) + "/data/ilpd_fallback.csv",
                                ts::LabelPolarity::kStandard)
                       .dataset;
  return ts::PrepareSplit(raw, {0.8, 42, true}).train;
}

fs::path TempFile(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("twinscope_model_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(ModelIo, ForestRoundTripIsBitExact) {
  const auto m = ts::TrainForest(FallbackTrain(), {.n_trees = 15, .seed = 2});
  const ts::AnyModel any(m);
  const auto text = ts::SerializeModel(any);
  const auto back = ts::ModelFromJson(nlohmann::json::parse(text));
  ASSERT_NE(back.forest(), nullptr);
  EXPECT_EQ(*back.forest(), m);
  EXPECT_EQ(ts::SerializeModel(back), text);
}

TEST(ModelIo, LogisticRoundTripIsBitExact) {
  const auto m = ts::TrainLogistic(FallbackTrain());
  const auto back = ts::ModelFromJson(ts::AnyModel(m).ToJson());
  ASSERT_NE(back.logistic(), nullptr);
  EXPECT_EQ(*back.logistic(), m);
  EXPECT_EQ(back.kind(), "logistic_regression");
}

TEST(ModelIo, FileEmbedsConfigAndStats) {
  const auto train = FallbackTrain();
  const auto m = ts::TrainForest(train, {.n_trees = 3, .max_depth = 4, .seed = 11});
  const auto doc = nlohmann::json::parse(ts::SerializeModel(ts::AnyModel(m)));
  EXPECT_EQ(doc["format"], "twinscope-model");
  EXPECT_EQ(doc["version"], 1);
  EXPECT_EQ(doc["config"]["max_depth"], 4);
  EXPECT_EQ(doc["config"]["seed"], 11);
  EXPECT_EQ(doc["training_stats"].size(), 10u);
  EXPECT_EQ(ts::ModelFromJson(doc).training_stats(), train.stats);
}

TEST(ModelIo, SaveLoadAndVersion) {
  const auto m = ts::AnyModel(ts::TrainLogistic(FallbackTrain()));
  const auto path = TempFile("m.json");
  ts::SaveModel(path.string(), m);
  const auto loaded = ts::LoadModel(path.string());
  EXPECT_EQ(loaded.version, ts::ModelVersion(ts::SerializeModel(m)));
  EXPECT_EQ(loaded.version.size(), 18u);
  EXPECT_EQ(loaded.version.substr(0, 2), "m-");
  auto p = oracle::Row0();
  EXPECT_EQ(loaded.model.PredictProba(p), m.PredictProba(p));
  fs::remove_all(path.parent_path());
}

TEST(ModelIo, RejectsMalformedFiles) {
  auto doc = ts::AnyModel(ts::TrainForest(FallbackTrain(), {.n_trees = 2})).ToJson();
  auto bad = doc;
  bad["format"] = "other";
  EXPECT_THROW(ts::ModelFromJson(bad), ts::Error);
  bad = doc;
  bad["version"] = 2;
  EXPECT_THROW(ts::ModelFromJson(bad), ts::Error);
  bad = doc;
  bad["trees"][0]["left"][0] = 999;
  EXPECT_THROW(ts::ModelFromJson(bad), ts::Error);
  bad = doc;
  bad["trees"].erase(1);
  EXPECT_THROW(ts::ModelFromJson(bad), ts::Error);
  bad = doc;
  bad.erase("training_stats");
  EXPECT_THROW(ts::ModelFromJson(bad), ts::Error);
  EXPECT_THROW(ts::LoadModel("/nonexistent/model.json"), ts::Error);
}
