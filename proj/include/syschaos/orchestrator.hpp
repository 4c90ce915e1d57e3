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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "syschaos/clock.hpp"
#include "syschaos/error_model.hpp"
#include "syschaos/logging.hpp"
#include "syschaos/metrics.hpp"
#include "syschaos/profile.hpp"
#include "syschaos/stats.hpp"

// Experiment orchestration.  One experiment drives a single error model
// against a running target through five phases:
//
//   warm-up    - wait for the target to settle; no measurements
//   pre-check  - mini-epoch; steady metrics that have drifted off their
//                baseline are excluded from the rest of the experiment
//   injection  - faults armed; mini-epoch measures deviation from baseline
//   recovery   - faults stopped; grace period, no measurements
//   validation - mini-epoch; affected metrics are tested for return to
//                baseline
//
// Per metric that passes the pre-check the runner scores two questions,
// each a two-sided Mann-Whitney U against the profile's pooled reference:
//
//   observed   - did the metric deviate during injection?   (p < alpha)
//   recovered  - was the metric back at baseline afterward? (p >= alpha);
//                asked only for metrics whose deviation was observed
//
// A target death before the injection phase voids the experiment (invalid);
// a death during or after injection is a crash, and a crash leaves every
// per-metric verdict untested.  For a surviving target the outcome is
// invisible (nothing deviated), resilient (every affected metric came
// back), long_term (no affected metric came back), or mixed (partial or
// undecidable recovery).
//
// All environment access goes through RunnerDeps (scrape function, liveness
// probe, injection factory, clock), so the full state machine runs under a
// virtual clock in tests.

namespace syschaos::orchestrate {

// ---------------------------------------------------------------------------
// Vocabulary

enum class Phase { warmup, precheck, injection, recovery, validation };

enum class Outcome {
  crash,      // target died during or after the injection phase
  invisible,  // no metric visibly deviated during injection
  resilient,  // every affected metric returned to baseline
  long_term,  // no affected metric returned to baseline
  mixed       // partial recovery, or recovery undecidable for some
              // affected metric
};

enum class Verdict { holds, rejected, skipped };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::warmup: return "warmup";
    case Phase::precheck: return "precheck";
    case Phase::injection: return "injection";
    case Phase::recovery: return "recovery";
    case Phase::validation: return "validation";
  }
  return "?";
}

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::crash: return "crash";
    case Outcome::invisible: return "invisible";
    case Outcome::resilient: return "resilient";
    case Outcome::long_term: return "long_term";
    case Outcome::mixed: return "mixed";
  }
  return "?";
}

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::rejected: return "rejected";
    case Verdict::skipped: return "skipped";
  }
  return "?";
}

inline std::optional<Phase> phase_from_string(const std::string& s) {
  for (Phase p : {Phase::warmup, Phase::precheck, Phase::injection,
                  Phase::recovery, Phase::validation}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

inline std::optional<Outcome> outcome_from_string(const std::string& s) {
  for (Outcome o : {Outcome::crash, Outcome::invisible, Outcome::resilient,
                    Outcome::long_term, Outcome::mixed}) {
    if (s == to_string(o)) return o;
  }
  return std::nullopt;
}

inline std::optional<Verdict> verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::holds, Verdict::rejected, Verdict::skipped}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration

struct Durations {
  int warmup_seconds = 7200;
  int precheck_seconds = 300;
  int injection_seconds = 300;
  int recovery_seconds = 600;
  int validation_seconds = 300;
};

struct ExperimentConfig {
  trace::ErrorModel model;
  std::uint64_t seed = 1;
  double alpha = 0.01;
  Durations durations;
  // A phase sample below this point count is not scored for that metric.
  int min_phase_points = 10;
  // Opt-in list for syscalls outside the default injectable set.
  std::set<std::string> extra_syscalls;
};

// ---------------------------------------------------------------------------
// Environment hooks

// Handle over a live injection session.  stop() must be idempotent and must
// leave the final counters readable.
class InjectionHandle {
 public:
  virtual ~InjectionHandle() = default;
  virtual void stop() = 0;
  virtual std::uint64_t injected() const = 0;
  virtual std::uint64_t intercepted() const = 0;
  virtual bool target_exited() const = 0;
};

using InjectionFactory = std::function<std::unique_ptr<InjectionHandle>(
    const trace::ErrorModel& model, std::uint64_t seed)>;

struct RunnerDeps {
  metrics::ScrapeFn scrape;            // one metrics exposition per call
  std::function<bool()> target_alive;  // cheap liveness probe
  InjectionFactory start_injection;    // arms faults; returned handle stops them
  Clock* clock = nullptr;
  log::EventLog* events = nullptr;     // optional structured progress log
};

// ---------------------------------------------------------------------------
// Results

struct MetricFinding {
  std::string name;
  metrics::MetricKind kind = metrics::MetricKind::gauge;
  // False when the metric had drifted off its baseline (or produced too few
  // points) during the pre-check; such metrics carry no further verdicts.
  bool precheck_passed = false;
  std::optional<double> precheck_p;
  std::optional<double> injection_p;
  std::optional<double> validation_p;
  Verdict observed = Verdict::skipped;   // deviation during injection
  Verdict recovered = Verdict::skipped;  // back at baseline during validation
};

struct ExperimentRecord {
  std::string target_id;
  trace::ErrorModel model;
  std::uint64_t seed = 1;
  double alpha = 0.01;
  Durations durations;
  int interval_seconds = 0;

  double started_at = 0.0;
  double finished_at = 0.0;

  // An invalid experiment produced no finding: the target died before any
  // error was injected, or injection could not be armed.  `outcome` is
  // absent in that case.
  bool invalid = false;
  std::string invalid_reason;

  bool crashed = false;
  std::optional<Phase> crash_phase;
  std::uint64_t injections_at_death = 0;

  std::uint64_t injected = 0;
  std::uint64_t intercepted = 0;

  std::vector<MetricFinding> findings;  // one per steady metric
  std::optional<Outcome> outcome;
};

// ---------------------------------------------------------------------------
// Outcome classification

// Aggregate counts over a record's findings; these are the numbers shown in
// the per-experiment row of a report (metrics evaluated, deviations seen,
// recoveries confirmed).
struct FindingSummary {
  int passed_precheck = 0;  // metrics carried into the injection phase
  int affected = 0;         // observed == holds
  int recovered = 0;        // affected and recovered == holds
  int not_recovered = 0;    // affected and recovered == rejected
};

inline FindingSummary summarize(const std::vector<MetricFinding>& findings) {
  FindingSummary s;
  for (const auto& f : findings) {
    if (f.precheck_passed) ++s.passed_precheck;
    if (f.observed != Verdict::holds) continue;
    ++s.affected;
    if (f.recovered == Verdict::holds) ++s.recovered;
    if (f.recovered == Verdict::rejected) ++s.not_recovered;
  }
  return s;
}

// Total, mutually exclusive outcome classification.  `recovered` and
// `not_recovered` count affected metrics only; their sum may fall short of
// `affected` when recovery was undecidable for some metric, which lands the
// run in `mixed`.
inline Outcome classify_outcome(bool crashed, int affected, int recovered,
                                int not_recovered) {
  if (crashed) return Outcome::crash;
  if (affected == 0) return Outcome::invisible;
  if (recovered == affected) return Outcome::resilient;
  if (not_recovered == affected) return Outcome::long_term;
  return Outcome::mixed;
}

inline Outcome classify_outcome(bool crashed,
                                const std::vector<MetricFinding>& findings) {
  const auto s = summarize(findings);
  return classify_outcome(crashed, s.affected, s.recovered, s.not_recovered);
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Durations& d) {
  j = nlohmann::json{{"warmup_seconds", d.warmup_seconds},
                     {"precheck_seconds", d.precheck_seconds},
                     {"injection_seconds", d.injection_seconds},
                     {"recovery_seconds", d.recovery_seconds},
                     {"validation_seconds", d.validation_seconds}};
}

inline void from_json(const nlohmann::json& j, Durations& d) {
  j.at("warmup_seconds").get_to(d.warmup_seconds);
  j.at("precheck_seconds").get_to(d.precheck_seconds);
  j.at("injection_seconds").get_to(d.injection_seconds);
  j.at("recovery_seconds").get_to(d.recovery_seconds);
  j.at("validation_seconds").get_to(d.validation_seconds);
}

inline void to_json(nlohmann::json& j, const MetricFinding& f) {
  j = nlohmann::json{{"name", f.name},
                     {"kind", metrics::to_string(f.kind)},
                     {"precheck_passed", f.precheck_passed},
                     {"observed", to_string(f.observed)},
                     {"recovered", to_string(f.recovered)}};
  if (f.precheck_p) j["precheck_p"] = *f.precheck_p;
  if (f.injection_p) j["injection_p"] = *f.injection_p;
  if (f.validation_p) j["validation_p"] = *f.validation_p;
}

inline void from_json(const nlohmann::json& j, MetricFinding& f) {
  j.at("name").get_to(f.name);
  j.at("precheck_passed").get_to(f.precheck_passed);
  const auto kind = metrics::kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("finding: bad metric kind");
  f.kind = *kind;
  const auto obs = verdict_from_string(j.at("observed").get<std::string>());
  const auto rec = verdict_from_string(j.at("recovered").get<std::string>());
  if (!obs || !rec) throw std::runtime_error("finding: bad verdict");
  f.observed = *obs;
  f.recovered = *rec;
  if (j.contains("precheck_p")) f.precheck_p = j.at("precheck_p").get<double>();
  if (j.contains("injection_p")) f.injection_p = j.at("injection_p").get<double>();
  if (j.contains("validation_p")) {
    f.validation_p = j.at("validation_p").get<double>();
  }
}

inline void to_json(nlohmann::json& j, const ExperimentRecord& r) {
  j = nlohmann::json{{"target_id", r.target_id},
                     {"model", r.model},
                     {"seed", r.seed},
                     {"alpha", r.alpha},
                     {"durations", r.durations},
                     {"interval_seconds", r.interval_seconds},
                     {"started_at", r.started_at},
                     {"finished_at", r.finished_at},
                     {"invalid", r.invalid},
                     {"crashed", r.crashed},
                     {"injected", r.injected},
                     {"intercepted", r.intercepted},
                     {"findings", r.findings}};
  if (r.invalid) j["invalid_reason"] = r.invalid_reason;
  if (r.crash_phase) j["crash_phase"] = to_string(*r.crash_phase);
  if (r.crashed) j["injections_at_death"] = r.injections_at_death;
  if (r.outcome) j["outcome"] = to_string(*r.outcome);
}

inline void from_json(const nlohmann::json& j, ExperimentRecord& r) {
  j.at("target_id").get_to(r.target_id);
  j.at("model").get_to(r.model);
  j.at("seed").get_to(r.seed);
  j.at("alpha").get_to(r.alpha);
  j.at("durations").get_to(r.durations);
  j.at("interval_seconds").get_to(r.interval_seconds);
  j.at("started_at").get_to(r.started_at);
  j.at("finished_at").get_to(r.finished_at);
  j.at("invalid").get_to(r.invalid);
  j.at("crashed").get_to(r.crashed);
  j.at("injected").get_to(r.injected);
  j.at("intercepted").get_to(r.intercepted);
  j.at("findings").get_to(r.findings);
  if (j.contains("invalid_reason")) {
    j.at("invalid_reason").get_to(r.invalid_reason);
  }
  if (j.contains("crash_phase")) {
    const auto p = phase_from_string(j.at("crash_phase").get<std::string>());
    if (!p) throw std::runtime_error("record: bad crash phase");
    r.crash_phase = *p;
  }
  if (j.contains("injections_at_death")) {
    j.at("injections_at_death").get_to(r.injections_at_death);
  }
  if (j.contains("outcome")) {
    const auto o = outcome_from_string(j.at("outcome").get<std::string>());
    if (!o) throw std::runtime_error("record: bad outcome");
    r.outcome = *o;
  }
}

inline void save_record(const ExperimentRecord& r,
                        const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write record: " + path.string());
  out << nlohmann::json(r).dump(2) << '\n';
}

inline ExperimentRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read record: " + path.string());
  nlohmann::json doc;
  in >> doc;
  return doc.get<ExperimentRecord>();
}

// ---------------------------------------------------------------------------
// Runner

namespace detail {

inline void emit(RunnerDeps& deps, const char* event, nlohmann::json fields) {
  if (deps.events) deps.events->emit(event, std::move(fields));
}

// Waits out a measurement-free phase in interval-sized steps, checking
// liveness after each step.  Returns false as soon as the target is gone.
inline bool wait_phase(RunnerDeps& deps, int seconds, int interval) {
  if (!deps.target_alive()) return false;
  int waited = 0;
  while (waited < seconds) {
    deps.clock->sleep_for(std::chrono::seconds(interval));
    waited += interval;
    if (!deps.target_alive()) return false;
  }
  return true;
}

// Scores `sample` against `reference`; returns the p-value, or nothing when
// the sample is too small to decide.
inline std::optional<double> score_phase(const std::vector<double>& sample,
                                         const std::vector<double>& reference,
                                         int min_points) {
  if (static_cast<int>(sample.size()) < min_points) return std::nullopt;
  return stats::mann_whitney_u(sample, reference).p_value;
}

// Points of `name` in `epoch`, empty when the metric is absent.
inline std::vector<double> phase_points(const metrics::MetricEpoch& epoch,
                                        const std::string& name) {
  const auto it = epoch.series.find(name);
  if (it == epoch.series.end()) return {};
  return it->second.values();
}

}  // namespace detail

// Runs one experiment end to end.  Throws std::invalid_argument for
// malformed configuration; environment trouble during the run is reported
// through the record (invalid / crashed), not exceptions.
inline ExperimentRecord run_experiment(const ExperimentConfig& cfg,
                                       const profile::SteadyStateProfile& prof,
                                       RunnerDeps deps) {
  if (!deps.scrape || !deps.target_alive || !deps.start_injection ||
      deps.clock == nullptr) {
    throw std::invalid_argument("run_experiment: incomplete dependencies");
  }
  cfg.model.validate(cfg.extra_syscalls);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw std::invalid_argument("run_experiment: alpha must be in (0, 1)");
  }
  if (cfg.min_phase_points < 1) {
    throw std::invalid_argument("run_experiment: min_phase_points must be >= 1");
  }
  if (cfg.durations.warmup_seconds < 0 || cfg.durations.recovery_seconds < 0) {
    throw std::invalid_argument("run_experiment: negative phase duration");
  }
  const int interval = prof.interval_seconds;
  // The measured phases must be well-formed scrape windows.
  metrics::validate_window(interval, cfg.durations.precheck_seconds);
  metrics::validate_window(interval, cfg.durations.injection_seconds);
  metrics::validate_window(interval, cfg.durations.validation_seconds);
  const auto steady = prof.steady_metrics();
  if (steady.empty()) {
    throw std::invalid_argument(
        "run_experiment: profile has no steady metrics to test against");
  }

  ExperimentRecord rec;
  rec.target_id = prof.target_id;
  rec.model = cfg.model;
  rec.seed = cfg.seed;
  rec.alpha = cfg.alpha;
  rec.durations = cfg.durations;
  rec.interval_seconds = interval;
  rec.started_at = to_unix_seconds(deps.clock->now());

  const auto finish = [&](ExperimentRecord& r) -> ExperimentRecord& {
    r.finished_at = to_unix_seconds(deps.clock->now());
    if (r.invalid) {
      detail::emit(deps, "experiment_invalid", {{"reason", r.invalid_reason}});
    } else if (r.outcome) {
      detail::emit(deps, "experiment_end", {{"outcome", to_string(*r.outcome)}});
    }
    return r;
  };
  const auto invalidate = [&](std::string reason) {
    rec.invalid = true;
    rec.invalid_reason = std::move(reason);
  };

  detail::emit(deps, "experiment_start",
               {{"target_id", rec.target_id},
                {"model", cfg.model.label()},
                {"rate", cfg.model.rate},
                {"seed", cfg.seed}});

  for (const auto& name : steady) {
    MetricFinding f;
    f.name = name;
    f.kind = prof.metrics.at(name).kind;
    rec.findings.push_back(std::move(f));
  }
  const auto kinds = prof.kind_map();

  // --- warm-up ------------------------------------------------------------
  detail::emit(deps, "phase_start", {{"phase", to_string(Phase::warmup)}});
  if (!detail::wait_phase(deps, cfg.durations.warmup_seconds, interval)) {
    invalidate("target died during warm-up, before any injection");
    return finish(rec);
  }

  // --- pre-check ----------------------------------------------------------
  detail::emit(deps, "phase_start", {{"phase", to_string(Phase::precheck)}});
  auto precheck_log =
      metrics::collect_scrape_log(deps.scrape, *deps.clock, rec.target_id,
                                  interval, cfg.durations.precheck_seconds,
                                  deps.target_alive);
  if (!metrics::scrape_log_complete(precheck_log) || !deps.target_alive()) {
    invalidate("target died during pre-check, before any injection");
    return finish(rec);
  }
  // A steady metric passes the pre-check when its sample is both large
  // enough to score and statistically at its baseline.  Metrics that fail
  // are excluded from all later verdicts; the experiment itself continues.
  const auto precheck_epoch = metrics::build_epoch(precheck_log, &kinds);
  int passed = 0;
  for (auto& f : rec.findings) {
    const auto& reference = prof.metrics.at(f.name).reference;
    f.precheck_p =
        detail::score_phase(detail::phase_points(precheck_epoch, f.name),
                            reference, cfg.min_phase_points);
    f.precheck_passed = f.precheck_p && *f.precheck_p >= cfg.alpha;
    if (f.precheck_passed) ++passed;
  }
  detail::emit(deps, "precheck_done",
               {{"steady_metrics", rec.findings.size()}, {"passed", passed}});

  // --- injection ----------------------------------------------------------
  detail::emit(deps, "phase_start", {{"phase", to_string(Phase::injection)}});
  auto handle = deps.start_injection(cfg.model, cfg.seed);
  if (!handle) {
    invalidate("injection could not be started");
    return finish(rec);
  }
  auto injection_log =
      metrics::collect_scrape_log(deps.scrape, *deps.clock, rec.target_id,
                                  interval, cfg.durations.injection_seconds,
                                  deps.target_alive);
  handle->stop();
  rec.injected = handle->injected();
  rec.intercepted = handle->intercepted();
  const bool injection_complete = metrics::scrape_log_complete(injection_log);
  if (!injection_complete || !deps.target_alive() || handle->target_exited()) {
    rec.crashed = true;
    rec.crash_phase = Phase::injection;
    rec.injections_at_death = rec.injected;
    detail::emit(deps, "target_death",
                 {{"phase", to_string(Phase::injection)},
                  {"injections", rec.injected}});
  }
  if (injection_complete) {
    // Record p-values even when the target died later; the verdicts below
    // are only assigned for a surviving target, so a crash leaves every
    // hypothesis untested while the raw data stays available.
    const auto epoch = metrics::build_epoch(injection_log, &kinds);
    for (auto& f : rec.findings) {
      if (!f.precheck_passed) continue;
      const auto& reference = prof.metrics.at(f.name).reference;
      f.injection_p = detail::score_phase(detail::phase_points(epoch, f.name),
                                          reference, cfg.min_phase_points);
    }
  }
  if (rec.crashed) {
    rec.outcome = Outcome::crash;
    return finish(rec);
  }

  // --- recovery -----------------------------------------------------------
  detail::emit(deps, "phase_start", {{"phase", to_string(Phase::recovery)}});
  if (!detail::wait_phase(deps, cfg.durations.recovery_seconds, interval)) {
    rec.crashed = true;
    rec.crash_phase = Phase::recovery;
    rec.injections_at_death = rec.injected;
    rec.outcome = Outcome::crash;
    detail::emit(deps, "target_death",
                 {{"phase", to_string(Phase::recovery)},
                  {"injections", rec.injected}});
    return finish(rec);
  }

  // --- validation ---------------------------------------------------------
  detail::emit(deps, "phase_start", {{"phase", to_string(Phase::validation)}});
  auto validation_log =
      metrics::collect_scrape_log(deps.scrape, *deps.clock, rec.target_id,
                                  interval, cfg.durations.validation_seconds,
                                  deps.target_alive);
  if (!metrics::scrape_log_complete(validation_log) || !deps.target_alive()) {
    rec.crashed = true;
    rec.crash_phase = Phase::validation;
    rec.injections_at_death = rec.injected;
    rec.outcome = Outcome::crash;
    detail::emit(deps, "target_death",
                 {{"phase", to_string(Phase::validation)},
                  {"injections", rec.injected}});
    return finish(rec);
  }
  const auto validation_epoch = metrics::build_epoch(validation_log, &kinds);
  for (auto& f : rec.findings) {
    if (!f.precheck_passed) continue;
    const auto& reference = prof.metrics.at(f.name).reference;
    f.validation_p =
        detail::score_phase(detail::phase_points(validation_epoch, f.name),
                            reference, cfg.min_phase_points);
  }

  // The target survived every phase: assign verdicts.  Deviation is asked
  // of every metric that passed the pre-check; return-to-baseline is asked
  // only of the metrics whose deviation was actually observed.
  for (auto& f : rec.findings) {
    if (!f.precheck_passed || !f.injection_p) continue;
    f.observed =
        *f.injection_p < cfg.alpha ? Verdict::holds : Verdict::rejected;
    if (f.observed == Verdict::holds && f.validation_p) {
      f.recovered =
          *f.validation_p >= cfg.alpha ? Verdict::holds : Verdict::rejected;
    }
  }

  rec.outcome = classify_outcome(false, rec.findings);
  return finish(rec);
}

}  // namespace syschaos::orchestrate
