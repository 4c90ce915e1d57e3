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
#include <iostream>
#include <mutex>
#include <string_view>

#include <nlohmann/json.hpp>

#include "syschaos/clock.hpp"

// Structured event logging: one JSON object per line, timestamped, written
// atomically under a lock so events from different threads never interleave
// mid-line.  Tools log to stderr and keep stdout for primary output.

namespace syschaos::log {

class EventLog {
 public:
  explicit EventLog(std::ostream& out = std::cerr) : out_(&out) {}

  void emit(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    fields["ts"] = iso8601(std::chrono::system_clock::now());
    fields["event"] = std::string(event);
    const std::string line = fields.dump();
    std::lock_guard<std::mutex> lock(mu_);
    (*out_) << line << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

}  // namespace syschaos::log
