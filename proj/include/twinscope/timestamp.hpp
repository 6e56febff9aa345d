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

// UTC timestamps with millisecond resolution, exchanged as
// "YYYY-MM-DDTHH:MM:SS.mmmZ".

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "twinscope/error.hpp"
#include "twinscope/text.hpp"

namespace twinscope {

using TimestampMs = std::int64_t;  // milliseconds since the Unix epoch

inline TimestampMs NowMs() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

inline std::string FormatTimestamp(TimestampMs ms) {
  using namespace std::chrono;
  const sys_time<milliseconds> tp{milliseconds{ms}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss<milliseconds> tod{tp - day};
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()),
                static_cast<int>(tod.subseconds().count()));
  return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]Z" with 1-3 fraction digits.
inline TimestampMs ParseTimestamp(std::string_view text) {
  using namespace std::chrono;
  const auto fail = [&]() -> Error {
    return Error(ErrorKind::kValidation,
                 "invalid timestamp '" + std::string(text) +
                     "' (expected YYYY-MM-DDTHH:MM:SS.mmmZ)",
                 "observed_at");
  };
  if (text.size() < 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text.back() != 'Z') {
    throw fail();
  }
  const auto num = [&](std::size_t pos, std::size_t len) {
    const auto v = ParseInt(text.substr(pos, len));
    if (!v || text[pos] == '-' || text[pos] == '+') throw fail();
    return *v;
  };
  const year_month_day ymd{year{static_cast<int>(num(0, 4))},
                           month{static_cast<unsigned>(num(5, 2))},
                           day{static_cast<unsigned>(num(8, 2))}};
  if (!ymd.ok()) throw fail();
  const long long h = num(11, 2), m = num(14, 2), s = num(17, 2);
  if (h > 23 || m > 59 || s > 59) throw fail();
  long long frac = 0;
  if (text.size() > 20) {
    if (text[19] != '.' || text.size() > 24 || text.size() < 22) throw fail();
    const std::size_t digits = text.size() - 21;
    frac = num(20, digits);
    for (std::size_t i = digits; i < 3; ++i) frac *= 10;
  }
  const auto tp = sys_days{ymd} + hours{h} + minutes{m} + seconds{s} + milliseconds{frac};
  return duration_cast<milliseconds>(tp.time_since_epoch()).count();
}

}  // namespace twinscope
