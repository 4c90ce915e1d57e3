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

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "syschaos/metrics.hpp"
#include "syschaos/stats.hpp"

// Steady-state profiling: which of a target's metrics are trustworthy
// baselines for hypothesis testing?
//
// Two equal-length epochs are collected back to back under normal load.  A
// metric qualifies as *steady* when it is active in both epochs and the two
// epochs' samples are statistically indistinguishable (two-sided
// Mann-Whitney U at level alpha).  The profile partitions every observed
// metric into:
//
//   inactive  - silent, flat, or mostly missing in at least one epoch
//   unstable  - active but the epochs disagree (drift, trends, warm-up)
//   steady    - active and indistinguishable across epochs
//
// Only steady metrics take part in experiments.  For those, the profile
// stores the pooled points of both epochs as the reference sample that all
// later phases are tested against.

namespace syschaos::profile {

enum class Steadiness { steady, unstable };

inline const char* to_string(Steadiness s) {
  return s == Steadiness::steady ? "steady" : "unstable";
}

struct MetricProfile {
  metrics::MetricKind kind = metrics::MetricKind::gauge;
  metrics::Activity activity = metrics::Activity::inactive;
  std::optional<Steadiness> steadiness;  // present iff active
  std::optional<double> p_value;         // present iff active
  std::vector<double> reference;         // non-empty iff steady
};

struct SteadyStateProfile {
  std::string target_id;
  double alpha = 0.01;
  int interval_seconds = 0;
  int epoch_duration_seconds = 0;
  double created_at = 0.0;
  std::map<std::string, MetricProfile> metrics;

  std::size_t total_count() const { return metrics.size(); }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const auto& [_, m] : metrics) {
      if (m.activity == metrics::Activity::active) ++n;
    }
    return n;
  }

  std::size_t steady_count() const {
    std::size_t n = 0;
    for (const auto& [_, m] : metrics) {
      if (m.steadiness == Steadiness::steady) ++n;
    }
    return n;
  }

  std::vector<std::string> steady_metrics() const {
    std::vector<std::string> out;
    for (const auto& [name, m] : metrics) {
      if (m.steadiness == Steadiness::steady) out.push_back(name);
    }
    return out;
  }

  // Kind assignments frozen at profiling time; later phase collection uses
  // these as overrides so a metric can never flip kind mid-experiment.
  std::map<std::string, metrics::MetricKind> kind_map() const {
    std::map<std::string, metrics::MetricKind> out;
    for (const auto& [name, m] : metrics) out[name] = m.kind;
    return out;
  }
};

inline SteadyStateProfile infer_steady_state(const metrics::MetricEpoch& e1,
                                             const metrics::MetricEpoch& e2,
                                             double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("infer_steady_state: alpha must be in (0, 1)");
  }
  if (e1.target_id != e2.target_id ||
      e1.interval_seconds != e2.interval_seconds ||
      e1.duration_seconds != e2.duration_seconds) {
    throw std::invalid_argument(
        "infer_steady_state: epochs disagree on target or window shape");
  }

  SteadyStateProfile profile;
  profile.target_id = e1.target_id;
  profile.alpha = alpha;
  profile.interval_seconds = e1.interval_seconds;
  profile.epoch_duration_seconds = e1.duration_seconds;
  profile.created_at = e2.start_time;

  const auto act1 = metrics::classify_activity(e1);
  const auto act2 = metrics::classify_activity(e2);

  std::set<std::string> names;
  for (const auto& [n, _] : e1.series) names.insert(n);
  for (const auto& [n, _] : e2.series) names.insert(n);

  for (const auto& name : names) {
    MetricProfile mp;
    const auto* s1 = e1.series.count(name) ? &e1.series.at(name) : nullptr;
    const auto* s2 = e2.series.count(name) ? &e2.series.at(name) : nullptr;
    mp.kind = s1 ? s1->kind : s2->kind;

    const bool active_both =
        s1 && s2 && act1.at(name) == metrics::Activity::active &&
        act2.at(name) == metrics::Activity::active &&
        s1->kind == s2->kind;  // a kind flip between epochs is no baseline
    if (!active_both) {
      mp.activity = metrics::Activity::inactive;
      profile.metrics[name] = std::move(mp);
      continue;
    }

    mp.activity = metrics::Activity::active;
    const auto v1 = s1->values();
    const auto v2 = s2->values();
    const auto cmp = stats::mann_whitney_u(v1, v2);
    mp.p_value = cmp.p_value;
    if (cmp.p_value < alpha) {
      mp.steadiness = Steadiness::unstable;
    } else {
      mp.steadiness = Steadiness::steady;
      mp.reference.reserve(v1.size() + v2.size());
      mp.reference.insert(mp.reference.end(), v1.begin(), v1.end());
      mp.reference.insert(mp.reference.end(), v2.begin(), v2.end());
    }
    profile.metrics[name] = std::move(mp);
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_profile(const SteadyStateProfile& p,
                         const std::filesystem::path& path) {
  nlohmann::json metrics_json = nlohmann::json::object();
  for (const auto& [name, m] : p.metrics) {
    nlohmann::json j{{"kind", metrics::to_string(m.kind)},
                     {"activity", metrics::to_string(m.activity)}};
    if (m.steadiness) j["steadiness"] = to_string(*m.steadiness);
    if (m.p_value) j["p_value"] = *m.p_value;
    if (!m.reference.empty()) j["reference"] = m.reference;
    metrics_json[name] = std::move(j);
  }
  const nlohmann::json doc{{"target_id", p.target_id},
                           {"alpha", p.alpha},
                           {"interval_seconds", p.interval_seconds},
                           {"epoch_duration_seconds", p.epoch_duration_seconds},
                           {"created_at", p.created_at},
                           {"metrics", metrics_json}};
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write profile: " + path.string());
  out << doc.dump(2) << '\n';
}

inline SteadyStateProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read profile: " + path.string());
  nlohmann::json doc;
  in >> doc;

  SteadyStateProfile p;
  p.target_id = doc.at("target_id").get<std::string>();
  p.alpha = doc.at("alpha").get<double>();
  p.interval_seconds = doc.at("interval_seconds").get<int>();
  p.epoch_duration_seconds = doc.at("epoch_duration_seconds").get<int>();
  p.created_at = doc.at("created_at").get<double>();
  for (const auto& [name, j] : doc.at("metrics").items()) {
    MetricProfile m;
    const auto kind = metrics::kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("profile: bad metric kind for " + name);
    m.kind = *kind;
    const auto act = j.at("activity").get<std::string>();
    if (act == "active") {
      m.activity = metrics::Activity::active;
    } else if (act == "inactive") {
      m.activity = metrics::Activity::inactive;
    } else {
      throw std::runtime_error("profile: bad activity for " + name);
    }
    if (j.contains("steadiness")) {
      const auto s = j.at("steadiness").get<std::string>();
      if (s == "steady") {
        m.steadiness = Steadiness::steady;
      } else if (s == "unstable") {
        m.steadiness = Steadiness::unstable;
      } else {
        throw std::runtime_error("profile: bad steadiness for " + name);
      }
    }
    if (j.contains("p_value")) m.p_value = j.at("p_value").get<double>();
    if (j.contains("reference")) {
      m.reference = j.at("reference").get<std::vector<double>>();
    }
    // Structural invariants; a profile violating them is corrupt.
    if (m.steadiness.has_value() != (m.activity == metrics::Activity::active)) {
      throw std::runtime_error("profile: steadiness/activity mismatch for " + name);
    }
    if (!m.reference.empty() && m.steadiness != Steadiness::steady) {
      throw std::runtime_error("profile: reference on non-steady metric " + name);
    }
    if (m.steadiness == Steadiness::steady && m.reference.empty()) {
      throw std::runtime_error("profile: steady metric lacks reference " + name);
    }
    p.metrics[name] = std::move(m);
  }
  return p;
}

}  // namespace syschaos::profile
