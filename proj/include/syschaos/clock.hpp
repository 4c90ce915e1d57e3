// Copyright 2026 The syschaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <string>
#include <thread>

// Time source abstraction.  Everything that schedules scrapes or phases
// takes a Clock&, so tests drive long experiments through a VirtualClock in
// microseconds of real time while production code uses the system clock.

namespace syschaos {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::system_clock::time_point now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  std::chrono::system_clock::time_point now() override {
    return std::chrono::system_clock::now();
  }
  void sleep_for(std::chrono::milliseconds d) override {
    std::this_thread::sleep_for(d);
  }
};

// Deterministic clock: `sleep_for` advances simulated time instantly.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(std::chrono::system_clock::time_point start =
                            std::chrono::system_clock::time_point{} +
                            std::chrono::seconds(1'700'000'000))
      : now_(start) {}

  std::chrono::system_clock::time_point now() override { return now_; }
  void sleep_for(std::chrono::milliseconds d) override { now_ += d; }
  void advance(std::chrono::milliseconds d) { now_ += d; }

 private:
  std::chrono::system_clock::time_point now_;
};

inline double to_unix_seconds(std::chrono::system_clock::time_point tp) {
  return std::chrono::duration<double>(tp.time_since_epoch()).count();
}

// ISO-8601 UTC with millisecond precision, e.g. 2026-08-23T10:15:30.123Z.
inline std::string iso8601(std::chrono::system_clock::time_point tp) {
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(tp);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(tp - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace syschaos
