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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "syschaos/clock.hpp"
#include "syschaos/prometheus.hpp"

// Epoch collection: turning a stream of scrapes into per-metric sample
// series that the statistics can chew on.
//
// An epoch of duration D with monitoring interval I is observed with D/I + 1
// scrapes, one at every interval boundary including both endpoints.  That
// yields exactly D/I points per metric:
//
//   * counters become per-second rates over each interval,
//     (raw[i] - raw[i-1]) / I, anchored at the interval's end timestamp;
//     a negative delta (counter reset or torn read) yields a missing point;
//   * gauges are sampled at each interval's end.
//
// Missing values are never interpolated.  A failed scrape or an absent
// metric just leaves holes; downstream classification deals with them:
//
//   * more than 5% of expected points missing  -> series flagged degraded
//   * more than 50% missing, or all points equal -> metric inactive
//
// The raw scrape log is what gets persisted (one JSON object per line), so
// an epoch can always be rebuilt bit-for-bit from disk.

namespace syschaos::metrics {

enum class MetricKind { counter, gauge };

inline const char* to_string(MetricKind k) {
  return k == MetricKind::counter ? "counter" : "gauge";
}

inline std::optional<MetricKind> kind_from_string(const std::string& s) {
  if (s == "counter") return MetricKind::counter;
  if (s == "gauge") return MetricKind::gauge;
  return std::nullopt;
}

struct MetricPoint {
  double timestamp = 0.0;  // unix seconds, end of the interval
  double value = 0.0;      // rate/s for counters, level for gauges
};

struct MetricSeries {
  MetricKind kind = MetricKind::gauge;
  std::vector<MetricPoint> points;
  bool degraded = false;  // > 5% of expected points missing

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.value);
    return out;
  }
};

struct MetricEpoch {
  std::string target_id;
  int interval_seconds = 0;
  int duration_seconds = 0;
  double start_time = 0.0;
  std::map<std::string, MetricSeries> series;

  int expected_points() const { return duration_seconds / interval_seconds; }
};

enum class Activity { active, inactive };

inline const char* to_string(Activity a) {
  return a == Activity::active ? "active" : "inactive";
}

// ---------------------------------------------------------------------------
// Raw scrape log

struct ScrapeRecord {
  int tick = 0;           // 0..D/I
  double timestamp = 0.0; // unix seconds when the scrape happened
  bool ok = false;        // false: scrape failed entirely
  std::map<std::string, double> values;
};

struct ScrapeLog {
  std::string target_id;
  int interval_seconds = 0;
  int duration_seconds = 0;
  double start_time = 0.0;
  std::map<std::string, std::string> type_hints;  // merged across scrapes
  std::vector<ScrapeRecord> records;
};

// One scrape attempt (retries, if any, live inside the callable).
// nullopt = the scrape failed and this tick's sample is lost.
using ScrapeFn = std::function<std::optional<prom::Exposition>()>;

inline void validate_window(int interval_seconds, int duration_seconds) {
  if (interval_seconds <= 0) {
    throw std::invalid_argument("monitoring interval must be positive");
  }
  if (duration_seconds <= 0 || duration_seconds % interval_seconds != 0) {
    throw std::invalid_argument(
        "duration must be a positive multiple of the monitoring interval");
  }
}

// Runs the scrape schedule for one epoch: a scrape at t=0, then one every
// interval through t=duration (inclusive).  When `keep_going` is provided
// and returns false at a tick boundary, collection stops there and the log
// comes back short -- covering fewer ticks than the window requested.
inline ScrapeLog collect_scrape_log(const ScrapeFn& scrape, Clock& clock,
                                    const std::string& target_id,
                                    int interval_seconds, int duration_seconds,
                                    const std::function<bool()>& keep_going = {}) {
  validate_window(interval_seconds, duration_seconds);
  ScrapeLog log;
  log.target_id = target_id;
  log.interval_seconds = interval_seconds;
  log.duration_seconds = duration_seconds;
  log.start_time = to_unix_seconds(clock.now());

  const int ticks = duration_seconds / interval_seconds;
  for (int tick = 0; tick <= ticks; ++tick) {
    if (tick > 0) clock.sleep_for(std::chrono::seconds(interval_seconds));
    if (keep_going && !keep_going()) break;
    ScrapeRecord rec;
    rec.tick = tick;
    rec.timestamp = to_unix_seconds(clock.now());
    if (auto exp = scrape()) {
      rec.ok = true;
      rec.values = std::move(exp->samples);
      for (auto& [k, v] : exp->type_hints) log.type_hints[k] = v;
    }
    log.records.push_back(std::move(rec));
  }
  return log;
}

// True when the log covers its full window (no early stop).
inline bool scrape_log_complete(const ScrapeLog& log) {
  return static_cast<int>(log.records.size()) ==
         log.duration_seconds / log.interval_seconds + 1;
}

namespace detail {

// Kind resolution: a declared TYPE hint wins (matched against the flattened
// name by base prefix, longest base first); otherwise a series whose raw
// values never decrease is treated as a counter.
inline MetricKind resolve_kind(const std::string& name,
                               const std::map<std::string, std::string>& hints,
                               const std::vector<double>& raw_values) {
  const std::string* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& [base, kind] : hints) {
    if (name == base ||
        (name.size() > base.size() + 1 && name.compare(0, base.size(), base) == 0 &&
         name[base.size()] == '.')) {
      if (base.size() >= best_len) {
        best = &kind;
        best_len = base.size();
      }
    }
  }
  if (best) {
    if (auto k = kind_from_string(*best)) return *k;
  }
  for (std::size_t i = 1; i < raw_values.size(); ++i) {
    if (raw_values[i] < raw_values[i - 1]) return MetricKind::gauge;
  }
  return raw_values.size() >= 2 ? MetricKind::counter : MetricKind::gauge;
}

}  // namespace detail

inline MetricEpoch build_epoch(
    const ScrapeLog& log,
    const std::map<std::string, MetricKind>* kind_overrides = nullptr) {
  validate_window(log.interval_seconds, log.duration_seconds);
  const int ticks = log.duration_seconds / log.interval_seconds;
  if (static_cast<int>(log.records.size()) != ticks + 1) {
    throw std::invalid_argument("scrape log does not cover the epoch window");
  }

  MetricEpoch epoch;
  epoch.target_id = log.target_id;
  epoch.interval_seconds = log.interval_seconds;
  epoch.duration_seconds = log.duration_seconds;
  epoch.start_time = log.start_time;

  std::set<std::string> names;
  for (const auto& rec : log.records) {
    for (const auto& [name, _] : rec.values) names.insert(name);
  }

  for (const auto& name : names) {
    std::vector<double> raw;
    for (const auto& rec : log.records) {
      if (!rec.ok) continue;
      if (auto it = rec.values.find(name); it != rec.values.end()) {
        raw.push_back(it->second);
      }
    }
    MetricKind kind;
    if (kind_overrides && kind_overrides->count(name)) {
      kind = kind_overrides->at(name);
    } else {
      kind = detail::resolve_kind(name, log.type_hints, raw);
    }

    MetricSeries series;
    series.kind = kind;
    for (int tick = 1; tick <= ticks; ++tick) {
      const auto& rec = log.records[static_cast<std::size_t>(tick)];
      if (!rec.ok) continue;
      const auto cur = rec.values.find(name);
      if (cur == rec.values.end() || !std::isfinite(cur->second)) continue;
      if (kind == MetricKind::gauge) {
        series.points.push_back({rec.timestamp, cur->second});
        continue;
      }
      const auto& prev = log.records[static_cast<std::size_t>(tick) - 1];
      if (!prev.ok) continue;
      const auto pv = prev.values.find(name);
      if (pv == prev.values.end() || !std::isfinite(pv->second)) continue;
      const double delta = cur->second - pv->second;
      if (delta < 0) continue;  // counter reset: drop, never interpolate
      series.points.push_back(
          {rec.timestamp, delta / static_cast<double>(log.interval_seconds)});
    }
    // Integer arithmetic: "more than 5% missing" must not trip on exact 5%.
    const long missing = ticks - static_cast<long>(series.points.size());
    series.degraded = missing * 100 > 5 * ticks;
    epoch.series[name] = std::move(series);
  }
  return epoch;
}

// Activity classification over one epoch.  A metric that carries no signal
// is inactive: mostly-missing series and flat series alike.
inline std::map<std::string, Activity> classify_activity(const MetricEpoch& epoch) {
  std::map<std::string, Activity> out;
  const long expected = epoch.expected_points();
  for (const auto& [name, series] : epoch.series) {
    const long missing = expected - static_cast<long>(series.points.size());
    bool inactive = missing * 2 > expected || series.points.empty();
    if (!inactive) {
      bool all_same = true;
      for (const auto& p : series.points) {
        if (p.value != series.points.front().value) {
          all_same = false;
          break;
        }
      }
      inactive = all_same;
    }
    out[name] = inactive ? Activity::inactive : Activity::active;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: one JSON object per line; a header line, then the records.

inline void save_scrape_log(const ScrapeLog& log, const std::filesystem::path& path) {
  nlohmann::json header{{"target_id", log.target_id},
                        {"interval_seconds", log.interval_seconds},
                        {"duration_seconds", log.duration_seconds},
                        {"start_time", log.start_time},
                        {"type_hints", log.type_hints}};
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write scrape log: " + path.string());
  out << header.dump() << '\n';
  for (const auto& rec : log.records) {
    nlohmann::json j{{"tick", rec.tick},
                     {"ts", rec.timestamp},
                     {"ok", rec.ok},
                     {"values", rec.values}};
    out << j.dump() << '\n';
  }
}

inline ScrapeLog load_scrape_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scrape log: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("scrape log is empty: " + path.string());
  }
  ScrapeLog log;
  {
    const auto header = nlohmann::json::parse(line);
    log.target_id = header.at("target_id").get<std::string>();
    log.interval_seconds = header.at("interval_seconds").get<int>();
    log.duration_seconds = header.at("duration_seconds").get<int>();
    log.start_time = header.at("start_time").get<double>();
    log.type_hints =
        header.at("type_hints").get<std::map<std::string, std::string>>();
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    ScrapeRecord rec;
    rec.tick = j.at("tick").get<int>();
    rec.timestamp = j.at("ts").get<double>();
    rec.ok = j.at("ok").get<bool>();
    rec.values = j.at("values").get<std::map<std::string, double>>();
    log.records.push_back(std::move(rec));
  }
  return log;
}

}  // namespace syschaos::metrics
