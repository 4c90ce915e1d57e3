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

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "syschaos/error_model.hpp"
#include "syschaos/syscall_stats.hpp"

// Error-model synthesis.
//
// Realistic chaos starts from what the target actually experiences: for
// every (syscall, errno) pair seen failing naturally during monitoring, an
// injection model is derived by amplifying the natural failure fraction,
//
//     rate = clamp(natural_rate * amplification, floor, cap)
//
// with defaults amplification = 50, floor = 0.05, cap = 1.0.  The floor
// lifts vanishingly rare errors to a level that can plausibly matter within
// a single experiment window; the cap keeps rates valid probabilities.
//
// For benchmarking several targets, `common_models` intersects per-target
// model sets on the (syscall, error) key and keeps, for each common pair,
// the maximum of the target-specific rates, so the shared model is at least
// as aggressive as every per-target one.

namespace syschaos::models {

struct SynthesisParams {
  double amplification = 50.0;
  double floor = 0.05;
  double cap = 1.0;
  // Only syscalls in the injectable set yield models; anything else seen in
  // the stats is reported on but not modeled unless opted in here.
  std::set<std::string> extra_syscalls;

  void validate() const {
    if (amplification <= 0.0) {
      throw std::invalid_argument("amplification must be positive");
    }
    if (!(floor >= 0.0 && cap <= 1.0 && floor <= cap)) {
      throw std::invalid_argument("need 0 <= floor <= cap <= 1");
    }
  }
};

inline std::vector<trace::ErrorModel> synthesize(const trace::SyscallStats& stats,
                                                 const SynthesisParams& params = {}) {
  params.validate();
  std::vector<trace::ErrorModel> out;
  for (const auto& [syscall, per] : stats.by_syscall) {
    if (per.invocations == 0) continue;
    const bool eligible = trace::default_injectable_syscalls().count(syscall) ||
                          params.extra_syscalls.count(syscall);
    if (!eligible) continue;
    for (const auto& [error, count] : per.errors) {
      if (count == 0) continue;
      if (!trace::errno_value(error)) continue;  // unmapped numeric leftovers
      trace::ErrorModel m;
      m.syscall = syscall;
      m.error = error;
      trace::ErrorModel::Provenance prov;
      prov.natural_rate = static_cast<double>(count) / static_cast<double>(per.invocations);
      prov.amplification = params.amplification;
      const double amplified = prov.natural_rate * params.amplification;
      double rate = amplified;
      if (rate < params.floor) {
        rate = params.floor;
        prov.clamped_to_floor = true;
      }
      if (rate > params.cap) {
        rate = params.cap;
        prov.clamped_to_cap = true;
      }
      m.rate = rate;
      m.provenance = prov;
      m.validate(params.extra_syscalls);
      out.push_back(std::move(m));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const trace::ErrorModel& a, const trace::ErrorModel& b) {
              return std::tie(a.syscall, a.error) < std::tie(b.syscall, b.error);
            });
  return out;
}

// Intersection of several targets' model sets on (syscall, error), keeping
// the exact maximum rate across targets for each surviving pair.
inline std::vector<trace::ErrorModel> common_models(
    const std::map<std::string, std::vector<trace::ErrorModel>>& per_target) {
  if (per_target.size() < 2) {
    throw std::invalid_argument("common_models needs at least two model sets");
  }
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, double>> acc;
  for (const auto& [_, models] : per_target) {
    std::set<std::pair<std::string, std::string>> seen;  // dedupe within a set
    for (const auto& m : models) {
      const auto key = std::make_pair(m.syscall, m.error);
      if (!seen.insert(key).second) continue;
      auto& [count, max_rate] = acc[key];
      ++count;
      max_rate = std::max(max_rate, m.rate);
    }
  }
  std::vector<trace::ErrorModel> out;
  for (const auto& [key, val] : acc) {
    if (val.first != per_target.size()) continue;  // not present everywhere
    trace::ErrorModel m;
    m.syscall = key.first;
    m.error = key.second;
    m.rate = val.second;
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(),
            [](const trace::ErrorModel& a, const trace::ErrorModel& b) {
              return std::tie(a.syscall, a.error) < std::tie(b.syscall, b.error);
            });
  return out;
}

}  // namespace syschaos::models
