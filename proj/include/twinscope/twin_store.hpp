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

// Per-patient digital twin store.
//
// Every patient has one append-only log file named after the patient id,
// holding newline-delimited JSON records
//
//   {"feature":"alt","value":50,"observed_at":"2024-05-01T08:30:00.000Z","source":"lab"}
//
// The snapshot is derived, never stored: per feature, the value with the
// latest observed_at wins, and among equal timestamps the later log entry
// wins. Reopening a directory replays every log, so the in-memory state is
// always a fold of what is on disk.
//
// All mutations take an exclusive lock and reach the file (and fsync, when
// enabled) before the new state is returned; readers take a shared lock.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "twinscope/error.hpp"
#include "twinscope/features.hpp"
#include "twinscope/timestamp.hpp"

namespace twinscope {

struct Observation {
  std::string patient_id;
  Feature feature = Feature::kAge;
  double value = 0.0;
  TimestampMs observed_at = 0;
  std::string source;
};

struct TwinState {
  std::string patient_id;
  PatientFeatures snapshot;
  std::size_t log_length = 0;
  TimestampMs updated_at = 0;  // latest observed_at in the log

  friend bool operator==(const TwinState&, const TwinState&) = default;
};

struct HistoryPoint {
  TimestampMs observed_at = 0;
  double value = 0.0;
  std::string source;

  friend bool operator==(const HistoryPoint&, const HistoryPoint&) = default;
};

inline bool IsValidPatientId(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

inline void ValidateObservationValue(Feature f, double value) {
  const std::string name(FeatureName(f));
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::kValidation, "value for '" + name + "' must be finite", name);
  }
  if (value < 0.0) {
    throw Error(ErrorKind::kValidation, "value for '" + name + "' must be >= 0", name);
  }
  if (f == Feature::kGender && value != 0.0 && value != 1.0) {
    throw Error(ErrorKind::kValidation, "gender must be 0 or 1", name);
  }
}

struct TwinStoreOptions {
  bool fsync = true;
};

class TwinStore {
 public:
  // Opens (creating if needed) a store directory and replays every log in
  // it. Torn trailing records are cut off and reported in warnings().
  explicit TwinStore(std::filesystem::path dir, TwinStoreOptions options = {})
      : dir_(std::move(dir)), options_(options) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (!std::filesystem::is_directory(dir_)) {
      throw Error(ErrorKind::kIo, "data directory " + dir_.string() + " is not usable");
    }
    Replay();
  }

  TwinStore(const TwinStore&) = delete;
  TwinStore& operator=(const TwinStore&) = delete;

  const std::filesystem::path& directory() const { return dir_; }

  std::vector<std::string> warnings() const {
    std::shared_lock lock(mu_);
    return warnings_;
  }

  TwinState Create(const std::string& patient_id, const PatientFeatures& baseline,
                   TimestampMs at, const std::string& source = "baseline") {
    if (!IsValidPatientId(patient_id)) {
      throw Error(ErrorKind::kValidation,
                  "patient id must be 1-128 characters of [A-Za-z0-9_-]", "id");
    }
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      ValidateObservationValue(FeatureAt(j), baseline.values[j]);
    }
    std::unique_lock lock(mu_);
    if (twins_.contains(patient_id)) {
      throw Error(ErrorKind::kConflict, "patient '" + patient_id + "' already exists", "id");
    }
    Twin twin;
    std::string lines;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      Entry e{FeatureAt(j), baseline.values[j], at, source};
      lines += EncodeEntry(e);
      twin.Apply(std::move(e));
    }
    AppendToFile(patient_id, lines, /*create=*/true);
    auto [it, inserted] = twins_.emplace(patient_id, std::move(twin));
    return it->second.State(patient_id);
  }

  TwinState Record(const Observation& obs) {
    ValidateObservationValue(obs.feature, obs.value);
    std::unique_lock lock(mu_);
    auto& twin = Find(obs.patient_id);
    Entry e{obs.feature, obs.value, obs.observed_at, obs.source};
    AppendToFile(obs.patient_id, EncodeEntry(e), /*create=*/false);
    twin.Apply(std::move(e));
    return twin.State(obs.patient_id);
  }

  TwinState State(const std::string& patient_id) const {
    std::shared_lock lock(mu_);
    return Find(patient_id).State(patient_id);
  }

  PatientFeatures Snapshot(const std::string& patient_id) const {
    std::shared_lock lock(mu_);
    return Find(patient_id).snapshot;
  }

  // Observations of one feature by ascending observed_at, log order on ties.
  std::vector<HistoryPoint> History(const std::string& patient_id, Feature feature) const {
    std::shared_lock lock(mu_);
    const auto& twin = Find(patient_id);
    std::vector<HistoryPoint> out;
    for (const auto& e : twin.log) {
      if (e.feature == feature) out.push_back({e.observed_at, e.value, e.source});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.observed_at < b.observed_at;
    });
    return out;
  }

  std::vector<TwinState> States() const {
    std::shared_lock lock(mu_);
    std::vector<TwinState> out;
    for (const auto& [id, twin] : twins_) out.push_back(twin.State(id));
    return out;
  }

  bool Contains(const std::string& patient_id) const {
    std::shared_lock lock(mu_);
    return twins_.contains(patient_id);
  }

 private:
  struct Entry {
    Feature feature;
    double value;
    TimestampMs observed_at;
    std::string source;
  };

  struct Twin {
    std::vector<Entry> log;
    PatientFeatures snapshot{};
    std::array<TimestampMs, kNumFeatures> winner_at{};
    std::array<bool, kNumFeatures> seen{};
    TimestampMs updated_at = 0;

    // Log order breaks timestamp ties, so ">=" makes the newer entry win.
    void Apply(Entry e) {
      const std::size_t j = Index(e.feature);
      if (!seen[j] || e.observed_at >= winner_at[j]) {
        seen[j] = true;
        winner_at[j] = e.observed_at;
        snapshot.values[j] = e.value;
      }
      updated_at = log.empty() ? e.observed_at : std::max(updated_at, e.observed_at);
      log.push_back(std::move(e));
    }

    bool Complete() const {
      return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    }

    TwinState State(const std::string& id) const {
      return TwinState{id, snapshot, log.size(), updated_at};
    }
  };

  const Twin& Find(const std::string& id) const {
    auto it = twins_.find(id);
    if (it == twins_.end()) {
      throw Error(ErrorKind::kNotFound, "unknown patient '" + id + "'", "id");
    }
    return it->second;
  }

  Twin& Find(const std::string& id) {
    return const_cast<Twin&>(static_cast<const TwinStore*>(this)->Find(id));
  }

  static std::string EncodeEntry(const Entry& e) {
    nlohmann::ordered_json j;
    j["feature"] = FeatureName(e.feature);
    j["value"] = e.value;
    j["observed_at"] = FormatTimestamp(e.observed_at);
    j["source"] = e.source;
    return j.dump() + "\n";
  }

  static Entry DecodeEntry(std::string_view line) {
    const auto j = nlohmann::json::parse(line);
    Entry e{ParseFeature(j.at("feature").get<std::string>()), j.at("value").get<double>(),
            ParseTimestamp(j.at("observed_at").get<std::string>()),
            j.at("source").get<std::string>()};
    ValidateObservationValue(e.feature, e.value);
    return e;
  }

  void SyncDirectory() const {
    if (!options_.fsync) return;
    const int fd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
      ::fsync(fd);
      ::close(fd);
    }
  }

  void AppendToFile(const std::string& id, const std::string& bytes, bool create) {
    const auto path = dir_ / id;
    const int flags = O_WRONLY | O_APPEND | O_CLOEXEC | (create ? O_CREAT | O_EXCL : 0);
    const int fd = ::open(path.c_str(), flags, 0644);
    if (fd < 0) {
      throw Error(create && errno == EEXIST ? ErrorKind::kConflict : ErrorKind::kIo,
                  "cannot open log " + path.string() + ": " + std::strerror(errno));
    }
    std::size_t written = 0;
    while (written < bytes.size()) {
      const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        const std::string why = std::strerror(errno);
        ::close(fd);
        throw Error(ErrorKind::kIo, "write to " + path.string() + " failed: " + why);
      }
      written += static_cast<std::size_t>(n);
    }
    if (options_.fsync && ::fsync(fd) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd);
      throw Error(ErrorKind::kIo, "fsync of " + path.string() + " failed: " + why);
    }
    ::close(fd);
    if (create) SyncDirectory();
  }

  void Replay() {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.is_regular_file() && IsValidPatientId(entry.path().filename().string())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) ReplayFile(path);
  }

  void ReplayFile(const std::filesystem::path& path) {
    const std::string id = path.filename().string();
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();

    Twin twin;
    std::size_t offset = 0;
    while (offset < data.size()) {
      const std::size_t nl = data.find('\n', offset);
      const bool complete = nl != std::string::npos;
      const std::string_view line(data.data() + offset,
                                  (complete ? nl : data.size()) - offset);
      try {
        twin.Apply(DecodeEntry(line));
        if (!complete) {
          // The record survived but its newline did not; restore it so the
          // next append starts on a fresh line.
          AppendToFile(id, "\n", false);
          warnings_.push_back(path.string() + ": restored missing final newline");
        }
      } catch (const std::exception& e) {
        if (complete) {
          throw Error(ErrorKind::kParse, path.string() + " offset " + std::to_string(offset) +
                                             ": corrupt record: " + e.what());
        }
        std::filesystem::resize_file(path, offset);
        warnings_.push_back(path.string() + ": truncated torn record at offset " +
                            std::to_string(offset));
      }
      if (!complete) break;
      offset = nl + 1;
    }
    if (!twin.Complete()) {
      // Only an interrupted create can leave a partial baseline; it was never
      // acknowledged, so the log is set aside rather than served.
      auto aside = path;
      aside += ".incomplete";
      std::filesystem::rename(path, aside);
      warnings_.push_back(path.string() + ": incomplete baseline moved to " + aside.string());
      return;
    }
    twins_.emplace(id, std::move(twin));
  }

  std::filesystem::path dir_;
  TwinStoreOptions options_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Twin> twins_;
  std::vector<std::string> warnings_;
};

}  // namespace twinscope
