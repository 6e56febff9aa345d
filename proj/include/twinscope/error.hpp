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

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace twinscope {

// Broad failure classes. The service maps these onto HTTP status codes and
// the CLI maps them onto exit statuses, so every thrown error carries one.
enum class ErrorKind {
  kParse,        // malformed text input (expressions, tables, CSV, JSON)
  kValidation,   // well-formed but semantically invalid input
  kNotFound,
  kConflict,     // duplicate ids, stale revisions
  kAmbiguous,    // UNIQUE hit policy with several matching rows
  kNumerical,    // non-finite model output, degenerate weights, flat curves
  kUnavailable,  // required artifact not loaded
  kIo,
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kValidation: return "validation_error";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kAmbiguous: return "ambiguous";
    case ErrorKind::kNumerical: return "numerical_error";
    case ErrorKind::kUnavailable: return "unavailable";
    case ErrorKind::kIo: return "io_error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string field = {})
      : std::runtime_error(std::move(message)),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const { return kind_; }
  // Offending field or feature name, when there is one.
  const std::string& field() const { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace twinscope
