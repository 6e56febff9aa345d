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

#include "harness.hpp"

namespace {

harness::CommandResult RunCli(const std::string& args, const std::string& cwd,
                              bool merge_stderr = true) {
  return harness::RunCommand("cd '" + cwd + "' && " + TWINSCOPE_CLI + std::string(" ") + args +
                             (merge_stderr ? " 2>&1" : " 2>/dev/null"));
}

std::string Source(const std::string& rel) { return std::string(TWINSCOPE_SOURCE_DIR) + "/" + rel; }

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_("cli") {}
  harness::CommandResult Cli(const std::string& args, bool merge_stderr = true) const {
    return RunCli(args, dir_.path().string(), merge_stderr);
  }
  std::string Read(const std::string& name) const { return harness::ReadFile(dir_ / name); }
  harness::TempDir dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Cli("").status, 2);
  EXPECT_EQ(Cli("frobnicate").status, 2);
  EXPECT_EQ(Cli("gen-data --out x.csv").status, 2);  // --seed is required
  EXPECT_EQ(Cli("train --data x.csv --seed notanumber").status, 2);
  EXPECT_EQ(Cli("--help").status, 0);
}

TEST_F(CliTest, RuntimeErrorsExitOneWithDiagnostic) {
  auto r = Cli("train --data missing.csv --seed 1");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("error: io_error"), std::string::npos) << r.output;

  harness::WriteFile(dir_ / "bad.dmt", "table t hit FIRST\ninputs: age, cholesterol\n| - | - | -> LOW\n");
  r = Cli("rules check bad.dmt");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("line 2, column 14"), std::string::npos) << r.output;

  r = Cli("gen-data --seed 1 --noise 0.7 --out x.csv");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("noise"), std::string::npos);
}

TEST_F(CliTest, RulesCheckAndEval) {
  auto r = Cli("rules check " + Source("rules/liver_risk.dmt"));
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("ok: table liver_risk"), std::string::npos);

  r = Cli("rules check --canonical " + Source("rules/alp_screen.dmt"));
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("| < 200 | -> LOW"), std::string::npos) << r.output;

  r = Cli("rules eval " + Source("rules/liver_risk.dmt") + " --features age=65,alt=130,ast=20");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("outcome: HIGH"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("* row 0: age \"-\" yes alt \"> 120\" yes ast \"-\" yes -> HIGH"),
            std::string::npos)
      << r.output;

  r = Cli("rules eval " + Source("rules/liver_risk.dmt") + " --features age=30,alt=16,ast=18");
  EXPECT_NE(r.output.find("outcome: LOW"), std::string::npos) << r.output;

  r = Cli("rules eval " + Source("rules/liver_risk.dmt") + " --features age=30,alt=16");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("ast"), std::string::npos) << r.output;
}

TEST_F(CliTest, ArtifactsAreReproducible) {
  ASSERT_EQ(Cli("gen-data --n 600 --seed 9 --out a.csv").status, 0);
  ASSERT_EQ(Cli("gen-data --n 600 --seed 9 --out b.csv").status, 0);
  EXPECT_EQ(Read("a.csv"), Read("b.csv"));
  EXPECT_NE(Read("a.csv"), "");

  const std::string train = "train --data a.csv --seed 4 --n-trees 30 ";
  auto r1 = Cli(train + "--out m1.json --report r.json");
  const auto report = Read("r.json");
  auto r2 = Cli(train + "--out m2.json");
  ASSERT_EQ(r1.status, 0) << r1.output;
  ASSERT_EQ(r2.status, 0);
  EXPECT_EQ(Read("m1.json"), Read("m2.json"));
  ASSERT_EQ(Cli(train + "--out m1.json --report r.json").status, 0);
  EXPECT_EQ(Read("r.json"), report);
  EXPECT_NE(r1.output.find("seed: 4"), std::string::npos);
  EXPECT_NE(r1.output.find("accuracy: "), std::string::npos);

  auto p1 = Cli("pdp --model m1.json --data a.csv --feature alp --out p1.csv");
  auto p2 = Cli("pdp --model m1.json --data a.csv --feature alp --out p2.csv");
  ASSERT_EQ(p1.status, 0) << p1.output;
  EXPECT_EQ(Read("p1.csv"), Read("p2.csv"));
  EXPECT_EQ(Read("p1.csv").rfind("grid,pdp\n", 0), 0u);

  auto e1 = Cli("explain --model m1.json --data a.csv --record 3 --seed 5 --csv e1.csv");
  auto e2 = Cli("explain --model m1.json --data a.csv --record 3 --seed 5 --csv e2.csv");
  ASSERT_EQ(e1.status, 0) << e1.output;
  EXPECT_EQ(Read("e1.csv"), Read("e2.csv"));
  EXPECT_NE(e1.output.find("local fidelity"), std::string::npos);

  auto c1 = Cli("curve --data a.csv --seed 4 --n-trees 10 --out c1.csv");
  auto c2 = Cli("curve --data a.csv --seed 4 --n-trees 10 --out c2.csv");
  ASSERT_EQ(c1.status, 0) << c1.output;
  EXPECT_EQ(Read("c1.csv"), Read("c2.csv"));

  auto d1 = Cli("train --data a.csv --seed 5 --n-trees 30 --out m3.json");
  EXPECT_NE(Read("m1.json"), Read("m3.json"));
}

TEST_F(CliTest, ConfigEchoReplaysRun) {
  auto r = Cli("gen-data --n 300 --seed 5 --noise 0.05 --out a.csv");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("seed=5"), std::string::npos) << r.output;
  const auto echoed = Read("a.csv.config.toml");
  EXPECT_NE(echoed.find("[gen-data]"), std::string::npos);
  EXPECT_NE(echoed.find("noise=0.05"), std::string::npos);
  r = Cli("--config a.csv.config.toml gen-data --out b.csv");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(Read("a.csv"), Read("b.csv"));

  ASSERT_EQ(Cli("train --data a.csv --seed 2 --n-trees 20 --out m.json").status, 0);
  ASSERT_EQ(Cli("--config m.json.config.toml train --out m2.json").status, 0);
  EXPECT_EQ(Read("m.json"), Read("m2.json"));
}

TEST_F(CliTest, FetchDataOffline) {
  auto r = Cli("fetch-data --offline --out data/ilpd.csv");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(Read("data/ilpd.csv"), harness::ReadFile(Source("data/ilpd_fallback.csv")));
  EXPECT_NE(r.output.find("fallback"), std::string::npos) << r.output;
}

TEST_F(CliTest, ReconcileReport) {
  ASSERT_EQ(Cli("gen-data --n 2000 --seed 3 --out s.csv").status, 0);
  ASSERT_EQ(Cli("train --data s.csv --seed 3 --out m.json").status, 0);
  auto r = Cli("reconcile --rules " + Source("rules/alp_screen.dmt") +
               " --model m.json --data s.csv --seed 1 --out rev.txt");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto report = Read("rev.txt");
  EXPECT_EQ(report.rfind("revision table=alp_screen row=0 column=alp old=\"< 200\" new=\"< 1", 0), 0u)
      << report;
  r = Cli("reconcile --rules " + Source("rules/alp_screen.dmt") +
          " --model m.json --data s.csv --seed 1 --json");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("\"id\": \"rev-1\""), std::string::npos) << r.output;
}

TEST_F(CliTest, ExplainFeaturesAndJson) {
  ASSERT_EQ(Cli("gen-data --n 600 --seed 9 --out a.csv").status, 0);
  ASSERT_EQ(Cli("train --data a.csv --seed 4 --n-trees 20 --out m.json").status, 0);
  const std::string row0 =
      "age=65,gender=0,total_bilirubin=0.7,direct_bilirubin=0.1,alp=187,alt=16,ast=18,"
      "total_proteins=6.8,albumin=3.3,ag_ratio=0.9";
  auto r = Cli("explain --model m.json --features " + row0 + " --seed 11 --json", false);
  ASSERT_EQ(r.status, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(j["contributions"].size(), 10u);
  EXPECT_EQ(j["ranking"].size(), 10u);
  r = Cli("explain --model m.json --features age=65 --seed 11");
  EXPECT_EQ(r.status, 1);
}
