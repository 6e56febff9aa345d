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

// twinscope: batch driver for data preparation, training, explanations,
// rule checks, reconciliation and the HTTP service.

#include <curl/curl.h>
#include <signal.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "twinscope/service.hpp"
#include "twinscope/twinscope.hpp"

namespace ts = twinscope;

namespace {

constexpr const char* kIlpdUrl =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00225/"
    "Indian%20Liver%20Patient%20Dataset%20(ILPD).csv";

#ifndef TWINSCOPE_SOURCE_DIR
#define TWINSCOPE_SOURCE_DIR "."
#endif

bool UseColor() { return std::getenv("NO_COLOR") == nullptr && ::isatty(STDOUT_FILENO); }

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ts::Error(ts::ErrorKind::kIo, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ts::Error(ts::ErrorKind::kIo, "cannot write " + path);
}

ts::LabelPolarity ParsePolarity(const std::string& s) {
  if (s == "standard") return ts::LabelPolarity::kStandard;
  if (s == "paper_table") return ts::LabelPolarity::kPaperTable;
  throw ts::Error(ts::ErrorKind::kValidation, "polarity must be 'standard' or 'paper_table'");
}

// "age=65,gender=0,..." with all ten features.
// With `complete`, all ten features are required; otherwise absent ones
// stay missing.
ts::PatientFeatures ParseFeatureList(const std::string& text, bool complete = true) {
  ts::PatientFeatures p;
  p.values.fill(ts::kMissing);
  for (auto item : ts::SplitOn(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ts::Error(ts::ErrorKind::kParse, "expected name=value, got '" + std::string(item) + "'");
    }
    const auto f = ts::ParseFeature(ts::Trim(item.substr(0, eq)));
    const auto v = ts::ParseDouble(item.substr(eq + 1));
    if (!v || !std::isfinite(*v)) {
      throw ts::Error(ts::ErrorKind::kValidation,
                      "value for '" + std::string(ts::FeatureName(f)) + "' is not a finite number",
                      std::string(ts::FeatureName(f)));
    }
    p[f] = *v;
  }
  if (complete) ts::RequireComplete(p);
  return p;
}

size_t CurlWrite(char* data, size_t size, size_t n, void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

std::optional<std::string> Download(const std::string& url, std::string& why) {
  CURL* curl = curl_easy_init();
  if (!curl) {
    why = "curl unavailable";
    return std::nullopt;
  }
  std::string body;
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 10L);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, 60L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, CurlWrite);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl);
  long status = 0;
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK) {
    why = curl_easy_strerror(rc);
    return std::nullopt;
  }
  if (status != 200) {
    why = "HTTP status " + std::to_string(status);
    return std::nullopt;
  }
  return body;
}

struct DataOptions {
  std::string path = "data/ilpd.csv";
  std::string polarity = "standard";
};

struct SplitOptions {
  double train_fraction = 0.8;
  bool no_stratify = false;
};

void AddDataOptions(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.path, "Dataset file (UCI ILPD or canonical CSV)")
      ->capture_default_str();
  cmd->add_option("--polarity", d.polarity, "Label polarity: standard | paper_table")
      ->capture_default_str();
}

void AddForestOptions(CLI::App* cmd, ts::ForestConfig& f, unsigned& threads) {
  cmd->add_option("--n-trees", f.n_trees)->capture_default_str();
  cmd->add_option("--max-depth", f.max_depth)->capture_default_str();
  cmd->add_option("--min-samples-leaf", f.min_samples_leaf)->capture_default_str();
  cmd->add_option("--features-per-split", f.features_per_split)->capture_default_str();
  cmd->add_option("--threads", threads, "Parallel tree training (results are identical)")
      ->capture_default_str();
}

void AddSurrogateOptions(CLI::App* cmd, ts::SurrogateConfig& s) {
  cmd->add_option("--samples", s.n_samples, "Perturbation samples")->capture_default_str();
  cmd->add_option("--kernel-width", s.kernel_width)->capture_default_str();
  cmd->add_option("--ridge-lambda", s.ridge_lambda)->capture_default_str();
  cmd->add_flag("--discretize", s.discretize, "Quartile-indicator representation");
}

ts::Dataset LoadData(const DataOptions& d) {
  auto loaded = ts::LoadAny(d.path, ParsePolarity(d.polarity));
  for (const auto& w : loaded.warnings) {
    std::cerr << "warning: row " << w.row << ": " << w.message << '\n';
  }
  return std::move(loaded.dataset);
}

// Dataset imputed with a trained model's statistics, for PDP and
// reconciliation against that model.
ts::Dataset LoadForModel(const DataOptions& d, const ts::AnyModel& model) {
  auto ds = LoadData(d);
  ds.stats = model.training_stats();
  return ts::Impute(ds);
}

void EchoConfig(const CLI::App& app, const std::string& artifact) {
  // Sectioned so the file can be passed back through --config.
  const std::string cfg = "[" + app.get_name() + "]\n" + app.config_to_str(true, false);
  std::cerr << "# effective configuration\n" << cfg;
  if (!artifact.empty()) WriteFile(artifact + ".config.toml", cfg);
}

void PrintExplanation(const ts::Explanation& e) {
  const bool color = UseColor();
  std::printf("risk probability: %.4f   local fidelity (weighted R^2): %.4f\n", e.prediction,
              e.local_fidelity);
  std::printf("%-18s %12s %14s\n", "feature", "value", "contribution");
  for (const auto& fi : ts::AggregateExplanations(std::span<const ts::Explanation>(&e, 1))) {
    const std::size_t j = ts::Index(fi.feature);
    const double c = e.contributions[j];
    const char* on = !color ? "" : c > 0 ? "\033[31m" : c < 0 ? "\033[32m" : "";
    const char* off = color ? "\033[0m" : "";
    std::printf("%-18s %12.4g %s%+14.6f%s\n", std::string(ts::kFeatureNames[j]).c_str(),
                e.instance.values[j], on, c, off);
  }
}

std::atomic<httplib::Server*> g_server{nullptr};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinscope: liver-risk decision support with rules, models and explanations"};
  app.set_config("--config", "", "TOML/INI configuration file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  // fetch-data
  std::string fetch_url = kIlpdUrl;
  std::string fetch_out = "data/ilpd.csv";
  std::string fetch_fallback = std::string(TWINSCOPE_SOURCE_DIR) + "/data/ilpd_fallback.csv";
  bool fetch_offline = false;
  auto* fetch = app.add_subcommand("fetch-data", "Download the UCI ILPD file (bundled fallback offline)");
  fetch->add_option("--url", fetch_url)->capture_default_str();
  fetch->add_option("--out", fetch_out)->capture_default_str();
  fetch->add_option("--fallback", fetch_fallback)->capture_default_str();
  fetch->add_flag("--offline", fetch_offline, "Skip the download and install the fallback");

  // gen-data
  std::size_t gen_n = 1000;
  std::string gen_rule = "alp>175";
  double gen_noise = 0.1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool gen_ilpd_like = false;
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic data with a planted threshold rule");
  gen->add_option("--n", gen_n)->capture_default_str();
  gen->add_option("--rule", gen_rule, "Planted rule, e.g. alp>175")->capture_default_str();
  gen->add_option("--noise", gen_noise, "Label flip probability in [0, 0.5)")->capture_default_str();
  gen->add_option("--seed", gen_seed)->required();
  gen->add_option("--out", gen_out, "Output file")->required();
  gen->add_flag("--ilpd-like", gen_ilpd_like,
                "Write an ILPD-shaped dataset in UCI layout instead (ignores --n/--rule/--noise)");

  // train
  DataOptions train_data;
  SplitOptions train_split;
  ts::ForestConfig forest_cfg;
  ts::LogisticConfig logistic_cfg;
  unsigned train_threads = 1;
  std::uint64_t train_seed = 0;
  std::string train_kind = "forest";
  std::string train_out = "model.json";
  std::string train_report;
  double train_threshold = 0.5;
  auto* train = app.add_subcommand("train", "Split, impute, train and evaluate a model");
  AddDataOptions(train, train_data);
  train->add_option("--seed", train_seed, "Split and model seed")->required();
  train->add_option("--train-fraction", train_split.train_fraction)->capture_default_str();
  train->add_flag("--no-stratify", train_split.no_stratify);
  train->add_option("--model-type", train_kind, "forest | logistic")->capture_default_str();
  AddForestOptions(train, forest_cfg, train_threads);
  train->add_option("--l2", logistic_cfg.l2)->capture_default_str();
  train->add_option("--iters", logistic_cfg.iters)->capture_default_str();
  train->add_option("--lr", logistic_cfg.lr)->capture_default_str();
  train->add_option("--threshold", train_threshold, "Decision threshold")->capture_default_str();
  train->add_option("--out", train_out, "Model file")->capture_default_str();
  train->add_option("--report", train_report, "Write the evaluation report as JSON");

  // curve
  DataOptions curve_data;
  SplitOptions curve_split;
  ts::ForestConfig curve_cfg;
  unsigned curve_threads = 1;
  std::uint64_t curve_seed = 0;
  std::vector<double> curve_fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  std::string curve_out;
  auto* curve = app.add_subcommand("curve", "Learning curve CSV for the forest");
  AddDataOptions(curve, curve_data);
  curve->add_option("--seed", curve_seed)->required();
  curve->add_option("--train-fraction", curve_split.train_fraction)->capture_default_str();
  curve->add_option("--fractions", curve_fractions)->delimiter(',')->capture_default_str();
  AddForestOptions(curve, curve_cfg, curve_threads);
  curve->add_option("--out", curve_out, "CSV output (stdout when omitted)");

  // explain
  std::string explain_model = "model.json";
  std::string explain_features;
  DataOptions explain_data;
  int explain_record = -1;
  ts::SurrogateConfig explain_cfg;
  std::string explain_csv;
  bool explain_json = false;
  auto* explain = app.add_subcommand("explain", "Local surrogate explanation of one patient");
  explain->add_option("--model", explain_model)->capture_default_str();
  auto* feat_opt = explain->add_option("--features", explain_features,
                                       "age=..,gender=..,... (all ten features)");
  AddDataOptions(explain, explain_data);
  explain->add_option("--record", explain_record, "0-based record index in --data")
      ->excludes(feat_opt);
  explain->add_option("--seed", explain_cfg.seed)->required();
  AddSurrogateOptions(explain, explain_cfg);
  explain->add_option("--csv", explain_csv, "Write contributions as CSV");
  explain->add_flag("--json", explain_json, "Print the wire-format JSON instead of a table");

  // pdp
  std::string pdp_model = "model.json";
  DataOptions pdp_data;
  std::string pdp_feature;
  ts::PdpOptions pdp_opts;
  std::string pdp_out;
  auto* pdp = app.add_subcommand("pdp", "Partial dependence curve CSV");
  pdp->add_option("--model", pdp_model)->capture_default_str();
  AddDataOptions(pdp, pdp_data);
  pdp->add_option("--feature", pdp_feature)->required();
  pdp->add_option("--grid-size", pdp_opts.grid_size)->capture_default_str();
  pdp->add_option("--clip-lo", pdp_opts.clip_lo, "Lower grid percentile")->capture_default_str();
  pdp->add_option("--clip-hi", pdp_opts.clip_hi, "Upper grid percentile")->capture_default_str();
  pdp->add_option("--out", pdp_out, "CSV output (stdout when omitted)");

  // rules
  auto* rules = app.add_subcommand("rules", "Decision table tools");
  rules->require_subcommand(1);
  std::string check_file;
  bool check_canonical = false;
  auto* rules_check = rules->add_subcommand("check", "Parse and validate a table");
  rules_check->add_option("table", check_file)->required();
  rules_check->add_flag("--canonical", check_canonical, "Print the canonical form");
  std::string eval_file;
  std::string eval_features;
  auto* rules_eval = rules->add_subcommand("eval", "Evaluate a table for one patient");
  rules_eval->add_option("table", eval_file)->required();
  rules_eval->add_option("--features", eval_features, "name=value pairs; the table's inputs are required")->required();

  // reconcile
  std::string rec_rules;
  std::string rec_model = "model.json";
  DataOptions rec_data;
  ts::ReconcileConfig rec_cfg;
  std::string rec_level = "midpoint";
  std::string rec_out;
  bool rec_json = false;
  auto* reconcile = app.add_subcommand("reconcile", "Propose rule threshold revisions");
  reconcile->add_option("--rules", rec_rules)->required();
  reconcile->add_option("--model", rec_model)->capture_default_str();
  AddDataOptions(reconcile, rec_data);
  reconcile->add_option("--seed", rec_cfg.surrogate.seed)->required();
  reconcile->add_option("--min-shift", rec_cfg.min_relative_shift)->capture_default_str();
  reconcile->add_option("--level", rec_level, "midpoint or a fixed probability")
      ->capture_default_str();
  reconcile->add_option("--grid-size", rec_cfg.pdp.grid_size)->capture_default_str();
  reconcile->add_option("--corroboration-instances", rec_cfg.corroboration_instances)
      ->capture_default_str();
  reconcile->add_option("--out", rec_out, "Write the report to a file");
  reconcile->add_flag("--json", rec_json);

  // serve
  ts::ServiceConfig serve_cfg;
  serve_cfg.model_path = "model.json";
  serve_cfg.data_dir = "twins";
  if (const char* dir = std::getenv("TWINSCOPE_DATA_DIR")) serve_cfg.data_dir = dir;
  std::string serve_polarity = "standard";
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--host", serve_cfg.host)->capture_default_str();
  serve->add_option("--port", serve_cfg.port)->capture_default_str();
  serve->add_option("--model", serve_cfg.model_path)->capture_default_str();
  serve->add_option("--rules", serve_cfg.rules_path)->required();
  serve->add_option("--data-dir", serve_cfg.data_dir, "Twin store directory")->capture_default_str();
  serve->add_option("--dataset", serve_cfg.dataset_path, "Dataset for /pdp and revision proposals");
  serve->add_option("--polarity", serve_polarity)->capture_default_str();
  serve->add_option("--seed", serve_cfg.reconcile.surrogate.seed, "Seed for revision evidence")
      ->capture_default_str();
  AddSurrogateOptions(serve, serve_cfg.surrogate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fetch) {
      std::string why;
      std::optional<std::string> body;
      if (!fetch_offline) body = Download(fetch_url, why);
      std::string source = fetch_url;
      if (body) {
        std::istringstream in(*body);
        ts::ParseIlpd(in, ts::LabelPolarity::kStandard);  // validates the download
      } else {
        std::cerr << "warning: " << (fetch_offline ? std::string("offline mode") : "download failed: " + why)
                  << "; installing the bundled synthetic fallback " << fetch_fallback << '\n';
        body = ReadFile(fetch_fallback);
        source = fetch_fallback;
      }
      WriteFile(fetch_out, *body);
      std::istringstream in(*body);
      const auto ds = ts::ParseIlpd(in, ts::LabelPolarity::kStandard).dataset;
      std::cout << "wrote " << fetch_out << " from " << source << ": " << ds.size()
                << " records, " << ds.CountMissing() << " missing cells\n";
      return 0;
    }

    if (*gen) {
      std::ostringstream out;
      if (gen_ilpd_like) {
        ts::WriteIlpd(out, ts::SynthIlpdLike(gen_seed), ts::LabelPolarity::kStandard);
      } else {
        ts::WriteCanonical(out, ts::SynthGenerate(gen_n, ts::ParseThresholdRule(gen_rule),
                                                  gen_noise, gen_seed));
      }
      WriteFile(gen_out, out.str());
      EchoConfig(*gen, gen_out);
      std::cout << "wrote " << gen_out << " (seed " << gen_seed << ")\n";
      return 0;
    }

    if (*train) {
      const auto raw = LoadData(train_data);
      const ts::SplitSpec spec{train_split.train_fraction, train_seed, !train_split.no_stratify};
      const auto parts = ts::PrepareSplit(raw, spec);
      ts::AnyModel model;
      if (train_kind == "forest") {
        forest_cfg.seed = train_seed;
        model = ts::AnyModel(ts::TrainForest(parts.train, forest_cfg, {train_threads, {}}));
      } else if (train_kind == "logistic") {
        model = ts::AnyModel(ts::TrainLogistic(parts.train, logistic_cfg));
      } else {
        throw ts::Error(ts::ErrorKind::kValidation, "model-type must be forest or logistic");
      }
      ts::SaveModel(train_out, model);
      const auto report = ts::EvaluateModel(model, parts.test, train_threshold);
      auto json = ts::wire::ToJson(report);
      json["model"] = train_out;
      json["model_version"] = ts::ModelVersion(ts::SerializeModel(model));
      json["kind"] = std::string(model.kind());
      json["seed"] = train_seed;
      json["n_train"] = parts.train.size();
      if (!train_report.empty()) WriteFile(train_report, json.dump(2) + "\n");
      EchoConfig(*train, train_out);
      std::printf("model: %s (%s, %s)\n", train_out.c_str(), std::string(model.kind()).c_str(),
                  json["model_version"].get<std::string>().c_str());
      std::printf("seed: %llu  train: %zu  test: %zu\n",
                  static_cast<unsigned long long>(train_seed), parts.train.size(), report.n_test);
      std::printf("accuracy: %s\nauc: %s\n", ts::FormatDouble(report.accuracy).c_str(),
                  ts::FormatDouble(report.auc).c_str());
      std::printf("confusion [actual x predicted]: tn=%zu fp=%zu fn=%zu tp=%zu\n",
                  report.confusion[0][0], report.confusion[0][1], report.confusion[1][0],
                  report.confusion[1][1]);
      return 0;
    }

    if (*curve) {
      const auto raw = LoadData(curve_data);
      curve_cfg.seed = curve_seed;
      const ts::SplitSpec spec{curve_split.train_fraction, curve_seed, true};
      const auto points =
          ts::LearningCurve(raw, curve_cfg, curve_fractions, spec, {curve_threads, {}});
      std::ostringstream out;
      ts::WriteLearningCurveCsv(out, points);
      if (curve_out.empty()) {
        std::cout << out.str();
      } else {
        WriteFile(curve_out, out.str());
      }
      EchoConfig(*curve, curve_out);
      return 0;
    }

    if (*explain) {
      const auto loaded = ts::LoadModel(explain_model);
      ts::PatientFeatures instance;
      if (!explain_features.empty()) {
        instance = ParseFeatureList(explain_features);
      } else if (explain_record >= 0) {
        const auto ds = LoadForModel(explain_data, loaded.model);
        if (static_cast<std::size_t>(explain_record) >= ds.size()) {
          throw ts::Error(ts::ErrorKind::kValidation, "record index out of range", "record");
        }
        instance = ds.records[static_cast<std::size_t>(explain_record)].features;
      } else {
        throw ts::Error(ts::ErrorKind::kValidation, "give --features or --record");
      }
      const auto e = ts::ExplainInstance(loaded.model, instance,
                                         loaded.model.training_stats(), explain_cfg);
      if (!explain_csv.empty()) {
        std::ostringstream out;
        ts::WriteExplanationCsv(out, e);
        WriteFile(explain_csv, out.str());
      }
      if (explain_json) {
        auto json = ts::wire::ToJson(e);
        json["seed"] = explain_cfg.seed;
        json["model_version"] = loaded.version;
        std::cout << json.dump(2) << '\n';
      } else {
        PrintExplanation(e);
      }
      EchoConfig(*explain, explain_csv);
      return 0;
    }

    if (*pdp) {
      const auto loaded = ts::LoadModel(pdp_model);
      const auto ds = LoadForModel(pdp_data, loaded.model);
      const auto c = ts::Pdp(loaded.model, ds, ts::ParseFeature(pdp_feature), pdp_opts);
      if (!c.warning.empty()) std::cerr << "warning: " << c.warning << '\n';
      std::ostringstream out;
      ts::WritePdpCsv(out, c);
      if (pdp_out.empty()) {
        std::cout << out.str();
      } else {
        WriteFile(pdp_out, out.str());
      }
      std::cerr << "range_effect: " << ts::FormatDouble(c.range_effect) << '\n';
      EchoConfig(*pdp, pdp_out);
      return 0;
    }

    if (*rules_check) {
      const auto table = ts::ParseTable(ReadFile(check_file));
      if (check_canonical) {
        std::cout << ts::PrintTable(table);
      } else {
        std::cout << "ok: table " << table.name << " (" << ts::HitPolicyName(table.hit_policy)
                  << ", " << table.inputs.size() << " inputs, " << table.rows.size()
                  << " rows)\n";
      }
      return 0;
    }

    if (*rules_eval) {
      const auto table = ts::ParseTable(ReadFile(eval_file));
      const auto d = ts::Evaluate(table, ParseFeatureList(eval_features, false));
      std::cout << "outcome: "
                << (d.outcome ? std::string(ts::RiskLevelName(*d.outcome)) : "NO_MATCH") << '\n';
      for (std::size_t r = 0; r < d.trace.size(); ++r) {
        const bool hit = std::find(d.matched_rows.begin(), d.matched_rows.end(), r) !=
                         d.matched_rows.end();
        std::cout << (hit ? "* " : "  ") << "row " << r << ":";
        for (std::size_t k = 0; k < d.trace[r].size(); ++k) {
          std::cout << ' ' << ts::FeatureName(table.inputs[k]) << " \""
                    << ts::PrintExpr(table.rows[r].cells[k]) << "\" "
                    << (d.trace[r][k] ? "yes" : "no");
        }
        std::cout << " -> " << ts::RiskLevelName(table.rows[r].output) << '\n';
      }
      return 0;
    }

    if (*reconcile) {
      const auto table = ts::ParseTable(ReadFile(rec_rules));
      const auto loaded = ts::LoadModel(rec_model);
      const auto ds = LoadForModel(rec_data, loaded.model);
      if (rec_level != "midpoint") {
        const auto p = ts::ParseDouble(rec_level);
        if (!p || !(*p > 0.0 && *p < 1.0)) {
          throw ts::Error(ts::ErrorKind::kValidation, "level must be 'midpoint' or in (0, 1)");
        }
        rec_cfg.crossing = ts::CrossingLevel::kFixed;
        rec_cfg.fixed_level = *p;
      }
      const auto revisions =
          ts::ProposeRevisions(table, loaded.model, ds, loaded.model.training_stats(), rec_cfg);
      std::string text;
      if (rec_json) {
        ts::wire::Json list = ts::wire::Json::array();
        for (std::size_t i = 0; i < revisions.size(); ++i) {
          list.push_back(ts::wire::ToJson(revisions[i], "rev-" + std::to_string(i + 1)));
        }
        text = list.dump(2) + "\n";
      } else {
        text = ts::RevisionReport(revisions);
        if (revisions.empty()) text = "no revisions proposed\n";
      }
      if (rec_out.empty()) {
        std::cout << text;
      } else {
        WriteFile(rec_out, text);
      }
      EchoConfig(*reconcile, rec_out);
      return 0;
    }

    if (*serve) {
      serve_cfg.polarity = ParsePolarity(serve_polarity);
      if (const char* token = std::getenv("TWINSCOPE_TOKEN")) serve_cfg.token = token;
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);

      ts::TwinService service(serve_cfg);
      httplib::Server server;
      service.Register(server);
      int port = serve_cfg.port;
      if (port == 0) {
        port = server.bind_to_any_port(serve_cfg.host);
      } else if (!server.bind_to_port(serve_cfg.host, port)) {
        throw ts::Error(ts::ErrorKind::kIo, "cannot bind " + serve_cfg.host + ":" +
                                                std::to_string(port) + " (port busy?)");
      }
      if (port < 0) throw ts::Error(ts::ErrorKind::kIo, "cannot bind a port");
      g_server = &server;
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        if (auto* s = g_server.load()) s->stop();
      });
      waiter.detach();
      std::cout << "listening on " << serve_cfg.host << ":" << port << " (model "
                << service.model_version() << ", rules " << service.rules_version() << ")"
                << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
      std::cout << "stopped" << std::endl;
      return 0;
    }
  } catch (const ts::Error& e) {
    std::cerr << "error: " << ts::ErrorKindName(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
