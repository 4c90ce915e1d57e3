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
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "syschaos/metrics.hpp"
#include "syschaos/prometheus.hpp"

// HTTP scraping of a target's metrics endpoint.  A scrape tick is allowed a
// few quick retries: a single dropped connection (or an injected error
// hitting the target's own metrics server) should cost nothing, while a
// target that is genuinely down makes the whole tick fail and the gap is
// recorded honestly in the scrape log.

namespace syschaos::scrape {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string path = "/metrics";
  int attempts = 5;
  std::chrono::milliseconds attempt_timeout{500};
  std::chrono::milliseconds retry_gap{40};
};

inline std::optional<prom::Exposition> fetch_once(const Endpoint& ep) {
  httplib::Client client(ep.host, ep.port);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(ep.attempt_timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(
      ep.attempt_timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  auto res = client.Get(ep.path);
  if (!res || res->status != 200) return std::nullopt;
  return prom::parse_exposition(res->body);
}

inline std::optional<prom::Exposition> fetch(const Endpoint& ep) {
  for (int i = 0; i < ep.attempts; ++i) {
    if (auto got = fetch_once(ep)) return got;
    if (i + 1 < ep.attempts) std::this_thread::sleep_for(ep.retry_gap);
  }
  return std::nullopt;
}

// Adapter to the collection pipeline's scrape-function contract.
inline metrics::ScrapeFn make_scraper(Endpoint ep) {
  return [ep]() { return fetch(ep); };
}

}  // namespace syschaos::scrape
