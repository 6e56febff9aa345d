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

// HTTP JSON API over a loaded model, a decision table and a twin store.
//
//   GET  /health
//   POST /patients                       {id, baseline, observed_at?}
//   GET  /patients/{id}
//   POST /patients/{id}/observations     {feature, value, observed_at?, source?}
//   GET  /patients/{id}/history?feature=alt
//   POST /assess                         {patient_id | features, overrides?, seed?}
//   GET  /pdp?feature=alt[&grid_size=50]
//   GET  /rules
//   GET  /revisions
//   POST /revisions/{id}/review          {verdict: accept|reject, reviewer}
//
// Errors are {error, field?, detail} with 400/404/409/422/503. When a token
// is configured every endpoint except /health requires
// "Authorization: Bearer <token>".
//
// The model is read-only after startup. The rule table is swapped under an
// exclusive lock when a revision is accepted; every assessment reads the
// table and its version under one shared lock, so a response never mixes
// versions. Twin writes are serialized by the store.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

// Eigen before httplib: <resolv.h> defines a _res macro.
#include "twinscope/explain.hpp"
#include "httplib.h"
#include "json.hpp"
#include "twinscope/dataset.hpp"
#include "twinscope/error.hpp"
#include "twinscope/ilpd_io.hpp"
#include "twinscope/model_io.hpp"
#include "twinscope/random.hpp"
#include "twinscope/reconcile.hpp"
#include "twinscope/rulelang.hpp"
#include "twinscope/timestamp.hpp"
#include "twinscope/twin_store.hpp"
#include "twinscope/wire.hpp"

namespace twinscope {

// Explanations for a stored patient are seeded from its id so repeated
// assessments agree.
inline std::uint64_t ExplanationSeed(std::string_view patient_id) {
  return Fnv1a64(patient_id);
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string model_path;
  std::string rules_path;
  std::string data_dir;
  std::string dataset_path;  // optional; enables /pdp and revision proposals
  std::string token;         // empty disables auth
  LabelPolarity polarity = LabelPolarity::kStandard;
  SurrogateConfig surrogate;
  ReconcileConfig reconcile;
  bool fsync = true;
};

class TwinService {
 public:
  explicit TwinService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    auto loaded = LoadModel(cfg_.model_path);
    model_ = std::move(loaded.model);
    model_version_ = std::move(loaded.version);
    table_ = ParseTable(ReadFile(cfg_.rules_path));
    rules_revision_ = 1 + CountAcceptedReviews();
    store_ = std::make_unique<TwinStore>(cfg_.data_dir, TwinStoreOptions{cfg_.fsync});
    if (!cfg_.dataset_path.empty()) {
      auto ds = LoadAny(cfg_.dataset_path, cfg_.polarity).dataset;
      ds.stats = model_.training_stats();
      dataset_ = Impute(ds);
      auto proposals = ProposeRevisions(table_, model_, *dataset_, model_.training_stats(),
                                        cfg_.reconcile);
      for (auto& rev : proposals) {
        pending_.emplace_back("rev-" + std::to_string(++revision_counter_), std::move(rev));
      }
    }
  }

  const std::string& model_version() const { return model_version_; }

  std::string rules_version() const {
    std::shared_lock lock(rules_mu_);
    return RulesVersionLocked();
  }

  const TwinStore& store() const { return *store_; }

  void Register(httplib::Server& server) {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (cfg_.token.empty() || req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + cfg_.token) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      wire::Json body = {{"error", "unauthorized"}, {"detail", "missing or invalid bearer token"}};
      res.status = 401;
      res.set_content(body.dump(), "application/json");
      return httplib::Server::HandlerResponse::Handled;
    });

    server.Get("/health", Wrap([this](const httplib::Request&) {
      wire::Json out = wire::Json::object();
      out["status"] = "ok";
      out["model_version"] = model_version_;
      out["rules_version"] = rules_version();
      return Reply{200, out};
    }));
    server.Post("/patients", Wrap([this](const httplib::Request& req) {
      return Reply{201, CreatePatient(ParseBody(req))};
    }));
    server.Get(R"(/patients/([A-Za-z0-9_-]+))", Wrap([this](const httplib::Request& req) {
      return Reply{200, wire::ToJson(store_->State(req.matches[1]))};
    }));
    server.Post(R"(/patients/([A-Za-z0-9_-]+)/observations)",
                Wrap([this](const httplib::Request& req) {
                  return Reply{200, RecordObservation(req.matches[1], ParseBody(req))};
                }));
    server.Get(R"(/patients/([A-Za-z0-9_-]+)/history)", Wrap([this](const httplib::Request& req) {
      return Reply{200, History(req.matches[1], req.get_param_value("feature"))};
    }));
    server.Post("/assess", Wrap([this](const httplib::Request& req) {
      return Reply{200, Assess(ParseBody(req))};
    }));
    server.Get("/pdp", Wrap([this](const httplib::Request& req) {
      int grid = cfg_.reconcile.pdp.grid_size;
      if (req.has_param("grid_size")) {
        const auto g = ParseInt(req.get_param_value("grid_size"));
        if (!g || *g < 2 || *g > 1000) {
          throw Error(ErrorKind::kValidation, "grid_size must be in [2, 1000]", "grid_size");
        }
        grid = static_cast<int>(*g);
      }
      return Reply{200, PdpFor(req.get_param_value("feature"), grid)};
    }));
    server.Get("/rules", Wrap([this](const httplib::Request&) { return Reply{200, Rules()}; }));
    server.Get("/revisions",
               Wrap([this](const httplib::Request&) { return Reply{200, PendingRevisions()}; }));
    server.Post(R"(/revisions/([A-Za-z0-9_-]+)/review)", Wrap([this](const httplib::Request& req) {
      return Reply{200, Review(req.matches[1], ParseBody(req))};
    }));
  }

  // --- operations, callable without HTTP ---

  wire::Json CreatePatient(const wire::Json& body) {
    const auto id = StringField(body, "id");
    if (!body.contains("baseline")) {
      throw Error(ErrorKind::kValidation, "missing 'baseline'", "baseline");
    }
    const auto baseline = wire::FeaturesFromJson(body.at("baseline"));
    const TimestampMs at = body.contains("observed_at") ? TimestampField(body, "observed_at")
                                                        : NowMs();
    return wire::ToJson(store_->Create(id, baseline, at));
  }

  wire::Json RecordObservation(const std::string& id, const wire::Json& body) {
    Observation obs;
    obs.patient_id = id;
    obs.feature = ParseFeature(StringField(body, "feature"));
    if (!body.contains("value")) throw Error(ErrorKind::kValidation, "missing 'value'", "value");
    obs.value = wire::NumberField(body.at("value"), "value");
    obs.observed_at = body.contains("observed_at") ? TimestampField(body, "observed_at") : NowMs();
    obs.source = body.contains("source") ? StringField(body, "source") : std::string("api");
    return wire::ToJson(store_->Record(obs));
  }

  wire::Json History(const std::string& id, const std::string& feature_name) const {
    if (feature_name.empty()) {
      throw Error(ErrorKind::kValidation, "query parameter 'feature' is required", "feature");
    }
    const Feature f = ParseFeature(feature_name);
    wire::Json series = wire::Json::array();
    for (const auto& h : store_->History(id, f)) series.push_back(wire::ToJson(h));
    wire::Json out = wire::Json::object();
    out["patient_id"] = id;
    out["feature"] = feature_name;
    out["series"] = std::move(series);
    return out;
  }

  // Snapshot (or raw features) overlaid with what-if overrides. Nothing is
  // written back to the store.
  wire::Json Assess(const wire::Json& body) const {
    PatientFeatures features;
    std::uint64_t seed = 0;
    if (body.contains("patient_id")) {
      const auto id = StringField(body, "patient_id");
      features = store_->Snapshot(id);
      seed = ExplanationSeed(id);
    } else if (body.contains("features")) {
      features = wire::FeaturesFromJson(body.at("features"));
      seed = Fnv1a64(wire::FeaturesToJson(features).dump());
    } else {
      throw Error(ErrorKind::kValidation, "request needs 'patient_id' or 'features'");
    }
    if (body.contains("overrides")) {
      for (const auto& [f, v] : wire::FeatureMapFromJson(body.at("overrides"))) {
        ValidateObservationValue(f, v);
        features[f] = v;
      }
    }
    if (body.contains("seed")) {
      const auto& s = body.at("seed");
      if (!s.is_number_unsigned()) {
        throw Error(ErrorKind::kValidation, "'seed' must be a non-negative integer", "seed");
      }
      seed = s.get<std::uint64_t>();
    }

    SurrogateConfig sc = cfg_.surrogate;
    sc.seed = seed;
    const auto explanation = ExplainInstance(model_, features, model_.training_stats(), sc);

    std::shared_lock lock(rules_mu_);
    wire::Json out = wire::Json::object();
    out["risk_probability"] = explanation.prediction;
    out["features"] = wire::FeaturesToJson(features);
    out["rule_decision"] = wire::ToJson(Evaluate(table_, features));
    out["explanation"] = wire::ToJson(explanation);
    out["seed"] = seed;
    out["model_version"] = model_version_;
    out["rules_version"] = RulesVersionLocked();
    return out;
  }

  wire::Json PdpFor(const std::string& feature_name, int grid_size) const {
    if (!dataset_) {
      throw Error(ErrorKind::kUnavailable, "no dataset loaded; start the service with --dataset");
    }
    if (feature_name.empty()) {
      throw Error(ErrorKind::kValidation, "query parameter 'feature' is required", "feature");
    }
    const Feature f = ParseFeature(feature_name);
    std::lock_guard lock(pdp_mu_);
    const auto key = std::make_pair(f, grid_size);
    auto it = pdp_cache_.find(key);
    if (it == pdp_cache_.end()) {
      PdpOptions opts = cfg_.reconcile.pdp;
      opts.grid_size = grid_size;
      it = pdp_cache_.emplace(key, Pdp(model_, *dataset_, f, opts)).first;
    }
    auto out = wire::ToJson(it->second);
    out["model_version"] = model_version_;
    return out;
  }

  wire::Json Rules() const {
    std::shared_lock lock(rules_mu_);
    wire::Json out = wire::Json::object();
    out["rules_version"] = RulesVersionLocked();
    out["canonical"] = PrintTable(table_);
    out["table"] = wire::ToJson(table_);
    return out;
  }

  wire::Json PendingRevisions() const {
    std::shared_lock lock(rules_mu_);
    wire::Json list = wire::Json::array();
    for (const auto& [id, rev] : pending_) list.push_back(wire::ToJson(rev, id));
    wire::Json out = wire::Json::object();
    out["rules_version"] = RulesVersionLocked();
    out["revisions"] = std::move(list);
    return out;
  }

  wire::Json Review(const std::string& id, const wire::Json& body) {
    const auto verdict = StringField(body, "verdict");
    if (verdict != "accept" && verdict != "reject") {
      throw Error(ErrorKind::kValidation, "verdict must be 'accept' or 'reject'", "verdict");
    }
    const auto reviewer = body.contains("reviewer") ? StringField(body, "reviewer") : std::string();

    std::unique_lock lock(rules_mu_);
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [&](const auto& p) { return p.first == id; });
    if (it == pending_.end()) {
      const bool done = std::any_of(archived_.begin(), archived_.end(),
                                    [&](const auto& a) { return a == id; });
      throw Error(done ? ErrorKind::kConflict : ErrorKind::kNotFound,
                  done ? "revision '" + id + "' was already reviewed"
                       : "unknown revision '" + id + "'",
                  "id");
    }
    if (verdict == "accept") {
      DecisionTable next;
      try {
        next = ApplyRevision(table_, it->second);
      } catch (const Error&) {
        AppendReview(id, "stale", reviewer);
        archived_.push_back(id);
        pending_.erase(it);
        throw;
      }
      WriteFileAtomic(cfg_.rules_path, PrintTable(next));
      table_ = std::move(next);
      ++rules_revision_;
    }
    AppendReview(id, verdict, reviewer);
    archived_.push_back(id);
    pending_.erase(it);
    wire::Json out = wire::Json::object();
    out["id"] = id;
    out["verdict"] = verdict;
    out["rules_version"] = RulesVersionLocked();
    return out;
  }

 private:
  struct Reply {
    int status;
    wire::Json body;
  };

  template <typename F>
  httplib::Server::Handler Wrap(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
      Reply reply{500, {}};
      try {
        reply = f(req);
      } catch (const Error& e) {
        reply = {wire::HttpStatus(e.kind()), wire::ErrorBody(e)};
      } catch (const std::exception& e) {
        reply = {500, wire::Json{{"error", "internal"}, {"detail", e.what()}}};
      }
      res.status = reply.status;
      res.set_content(reply.body.dump(), "application/json");
    };
  }

  static wire::Json ParseBody(const httplib::Request& req) {
    try {
      return wire::Json::parse(req.body);
    } catch (const wire::Json::out_of_range& e) {
      // Well-formed, but a number overflows to a non-finite value.
      throw Error(ErrorKind::kValidation, std::string("non-finite number in request: ") + e.what());
    } catch (const wire::Json::exception& e) {
      throw Error(ErrorKind::kParse, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  static std::string StringField(const wire::Json& body, const std::string& name) {
    if (!body.is_object() || !body.contains(name) || !body.at(name).is_string()) {
      throw Error(ErrorKind::kValidation, "'" + name + "' must be a string", name);
    }
    return body.at(name).get<std::string>();
  }

  static TimestampMs TimestampField(const wire::Json& body, const std::string& name) {
    const auto& v = body.at(name);
    if (v.is_number_integer()) return v.get<TimestampMs>();
    if (v.is_string()) return ParseTimestamp(v.get<std::string>());
    throw Error(ErrorKind::kValidation, "'" + name + "' must be a timestamp string", name);
  }

  static std::string ReadFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  static void WriteFileAtomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << text;
      out.flush();
      if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  std::string ReviewLogPath() const { return cfg_.rules_path + ".reviews.jsonl"; }

  std::size_t CountAcceptedReviews() const {
    std::ifstream in(ReviewLogPath());
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
      try {
        if (nlohmann::json::parse(line).value("verdict", "") == "accept") ++n;
      } catch (const nlohmann::json::exception&) {
        // torn trailing line from an interrupted review
      }
    }
    return n;
  }

  void AppendReview(const std::string& id, const std::string& verdict,
                    const std::string& reviewer) {
    wire::Json rec = wire::Json::object();
    rec["revision"] = id;
    rec["verdict"] = verdict;
    rec["reviewer"] = reviewer;
    rec["at"] = FormatTimestamp(NowMs());
    rec["table"] = PrintTable(table_);
    std::ofstream out(ReviewLogPath(), std::ios::app);
    out << rec.dump() << '\n';
  }

  std::string RulesVersionLocked() const {
    std::ostringstream os;
    os << "r" << rules_revision_ << "-" << std::hex << std::setw(8) << std::setfill('0')
       << (Fnv1a64(PrintTable(table_)) & 0xffffffffULL);
    return os.str();
  }

  ServiceConfig cfg_;
  AnyModel model_;
  std::string model_version_;
  std::unique_ptr<TwinStore> store_;
  std::optional<Dataset> dataset_;

  mutable std::shared_mutex rules_mu_;
  DecisionTable table_;
  std::size_t rules_revision_ = 1;
  std::size_t revision_counter_ = 0;
  std::vector<std::pair<std::string, RuleRevision>> pending_;
  std::vector<std::string> archived_;

  mutable std::mutex pdp_mu_;
  mutable std::map<std::pair<Feature, int>, PdpCurve> pdp_cache_;
};

}  // namespace twinscope
