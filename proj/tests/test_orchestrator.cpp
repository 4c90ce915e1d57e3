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

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "support/synthetic.hpp"
#include "support/tempdir.hpp"
#include "syschaos/clock.hpp"
#include "syschaos/orchestrator.hpp"

namespace orc = syschaos::orchestrate;
using syschaos::VirtualClock;
using syschaos::to_unix_seconds;

namespace {

// Simulated target for the experiment state machine.  Exposes one gauge
// ("load", baseline 100) and one counter ("ops", baseline rate 50/s); the
// fake injection handle shifts those levels while armed.
struct FakeEnv {
  VirtualClock clock;
  double t0 = 0.0;
  double death_elapsed = -1.0;  // target dies at this elapsed time; <0 = never

  double gauge_level = 100.0;
  double ops_rate = 50.0;
  double ops_total = 0.0;
  double last_scrape_t = 0.0;

  FakeEnv() {
    t0 = to_unix_seconds(clock.now());
    last_scrape_t = t0;
  }

  double elapsed() { return to_unix_seconds(clock.now()) - t0; }

  bool alive() { return death_elapsed < 0.0 || elapsed() < death_elapsed; }

  std::optional<syschaos::prom::Exposition> scrape() {
    const double now = to_unix_seconds(clock.now());
    ops_total += ops_rate * (now - last_scrape_t);
    last_scrape_t = now;
    syschaos::prom::Exposition exp;
    exp.samples["load"] = gauge_level;
    exp.samples["ops"] = ops_total;
    exp.type_hints["load"] = "gauge";
    exp.type_hints["ops"] = "counter";
    return exp;
  }
};

struct FakeInjection final : orc::InjectionHandle {
  FakeEnv& env;
  double started_elapsed;
  std::optional<double> stopped_elapsed;
  std::function<void()> on_stop;

  explicit FakeInjection(FakeEnv& e) : env(e), started_elapsed(e.elapsed()) {}

  void stop() override {
    if (stopped_elapsed) return;
    stopped_elapsed = env.elapsed();
    if (on_stop) on_stop();
  }
  std::uint64_t injected() const override {
    const double end = stopped_elapsed.value_or(
        to_unix_seconds(const_cast<FakeEnv&>(env).clock.now()) - env.t0);
    return static_cast<std::uint64_t>(3.0 * (end - started_elapsed));
  }
  std::uint64_t intercepted() const override { return injected() * 4 + 7; }
  bool target_exited() const override {
    return !const_cast<FakeEnv&>(env).alive();
  }
};

// Profile with the two steady metrics the fake target exposes.  References
// are pooled-epoch stand-ins: 40 gaussian points around each baseline.
syschaos::profile::SteadyStateProfile fake_profile() {
  syschaos::profile::SteadyStateProfile p;
  p.target_id = "fake";
  p.alpha = 0.01;
  p.interval_seconds = 1;
  p.epoch_duration_seconds = 40;
  p.created_at = 1.7e9;

  auto add = [&](const std::string& name, syschaos::metrics::MetricKind kind,
                 std::uint64_t seed, double mean) {
    syschaos::profile::MetricProfile m;
    m.kind = kind;
    m.activity = syschaos::metrics::Activity::active;
    m.steadiness = syschaos::profile::Steadiness::steady;
    m.p_value = 0.8;
    m.reference = testsupport::gaussian_values(seed, 39, mean, 1.0);
    p.metrics[name] = std::move(m);
  };
  add("load", syschaos::metrics::MetricKind::gauge, 11, 100.0);
  add("ops", syschaos::metrics::MetricKind::counter, 12, 50.0);
  return p;
}

orc::ExperimentConfig fast_config() {
  orc::ExperimentConfig cfg;
  cfg.model = {"read", "EAGAIN", 0.5, std::nullopt};
  cfg.seed = 7;
  cfg.alpha = 0.01;
  cfg.durations = {5, 20, 20, 10, 20};
  cfg.min_phase_points = 10;
  return cfg;
}

struct Wiring {
  FakeEnv env;
  std::string armed_label;
  std::uint64_t armed_seed = 0;
  int sessions_started = 0;

  // While armed the target runs at the given levels; `restore` decides
  // whether stopping the faults brings the baseline back.
  orc::RunnerDeps deps(double gauge_during, double rate_during, bool restore,
                       syschaos::log::EventLog* events = nullptr) {
    orc::RunnerDeps d;
    d.scrape = [this] { return env.scrape(); };
    d.target_alive = [this] { return env.alive(); };
    d.start_injection = [this, gauge_during, rate_during, restore](
                            const syschaos::trace::ErrorModel& m,
                            std::uint64_t seed) {
      armed_label = m.label();
      armed_seed = seed;
      ++sessions_started;
      auto h = std::make_unique<FakeInjection>(env);
      env.gauge_level = gauge_during;
      env.ops_rate = rate_during;
      if (restore) {
        h->on_stop = [this] {
          env.gauge_level = 100.0;
          env.ops_rate = 50.0;
        };
      }
      return h;
    };
    d.clock = &env.clock;
    d.events = events;
    return d;
  }
};

const orc::MetricFinding& finding(const orc::ExperimentRecord& rec,
                                  const std::string& name) {
  for (const auto& f : rec.findings) {
    if (f.name == name) return f;
  }
  FAIL("no finding for metric " + name);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("deviating then recovering target is resilient", "[orchestrator]") {
  Wiring w;
  std::ostringstream events_out;
  syschaos::log::EventLog events(events_out);
  auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                 w.deps(140.0, 10.0, true, &events));

  REQUIRE_FALSE(rec.invalid);
  REQUIRE_FALSE(rec.crashed);
  REQUIRE(rec.outcome == orc::Outcome::resilient);
  CHECK(rec.target_id == "fake");
  CHECK(rec.interval_seconds == 1);

  // Both metrics pass the pre-check, deviate under faults, and come back.
  for (const auto* name : {"load", "ops"}) {
    const auto& f = finding(rec, name);
    CHECK(f.precheck_passed);
    REQUIRE(f.precheck_p.has_value());
    CHECK(*f.precheck_p >= rec.alpha);
    REQUIRE(f.injection_p.has_value());
    CHECK(*f.injection_p < rec.alpha);
    REQUIRE(f.validation_p.has_value());
    CHECK(*f.validation_p >= rec.alpha);
    CHECK(f.observed == orc::Verdict::holds);
    CHECK(f.recovered == orc::Verdict::holds);
  }
  const auto s = orc::summarize(rec.findings);
  CHECK(s.passed_precheck == 2);
  CHECK(s.affected == 2);
  CHECK(s.recovered == 2);
  CHECK(s.not_recovered == 0);

  // The injection session saw the configured model and seed, exactly once.
  CHECK(w.sessions_started == 1);
  CHECK(w.armed_label == "read/EAGAIN");
  CHECK(w.armed_seed == 7);
  CHECK(rec.injected == 60);  // 3/s over the 20 s injection window
  CHECK(rec.intercepted == rec.injected * 4 + 7);

  // Virtual time covered exactly the five configured phases.
  CHECK(rec.finished_at - rec.started_at == Catch::Approx(75.0));

  const auto log_text = events_out.str();
  CHECK(log_text.find("experiment_start") != std::string::npos);
  CHECK(log_text.find("\"phase\":\"injection\"") != std::string::npos);
  CHECK(log_text.find("experiment_end") != std::string::npos);
}

TEST_CASE("fault with no metric footprint is invisible", "[orchestrator]") {
  Wiring w;
  auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                 w.deps(100.0, 50.0, false));

  REQUIRE_FALSE(rec.invalid);
  REQUIRE(rec.outcome == orc::Outcome::invisible);
  for (const auto* name : {"load", "ops"}) {
    const auto& f = finding(rec, name);
    CHECK(f.observed == orc::Verdict::rejected);
    // Return-to-baseline is only asked about metrics that deviated.
    CHECK(f.recovered == orc::Verdict::skipped);
  }
}

TEST_CASE("deviation that never heals is a long-term effect", "[orchestrator]") {
  Wiring w;
  // Gauge shifts and stays shifted; the counter rate never moves.
  auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                 w.deps(140.0, 50.0, false));

  REQUIRE_FALSE(rec.invalid);
  REQUIRE(rec.outcome == orc::Outcome::long_term);
  const auto& load = finding(rec, "load");
  CHECK(load.observed == orc::Verdict::holds);
  CHECK(load.recovered == orc::Verdict::rejected);
  const auto& ops = finding(rec, "ops");
  CHECK(ops.observed == orc::Verdict::rejected);
  CHECK(ops.recovered == orc::Verdict::skipped);
}

TEST_CASE("partial recovery is mixed", "[orchestrator]") {
  Wiring w;
  // Both metrics deviate under faults; stopping them restores the counter
  // rate but leaves the gauge displaced.
  auto deps = w.deps(140.0, 10.0, false);
  deps.start_injection = [&w](const syschaos::trace::ErrorModel&,
                              std::uint64_t) {
    auto h = std::make_unique<FakeInjection>(w.env);
    w.env.gauge_level = 140.0;
    w.env.ops_rate = 10.0;
    h->on_stop = [&w] { w.env.ops_rate = 50.0; };  // gauge stays at 140
    return h;
  };
  auto rec = orc::run_experiment(fast_config(), fake_profile(), deps);

  REQUIRE_FALSE(rec.invalid);
  REQUIRE(rec.outcome == orc::Outcome::mixed);
  CHECK(finding(rec, "load").observed == orc::Verdict::holds);
  CHECK(finding(rec, "load").recovered == orc::Verdict::rejected);
  CHECK(finding(rec, "ops").observed == orc::Verdict::holds);
  CHECK(finding(rec, "ops").recovered == orc::Verdict::holds);
}

TEST_CASE("late-appearing deviation leaves the injection invisible",
          "[orchestrator]") {
  Wiring w;
  // Nothing moves while faults are armed, but stopping them knocks the
  // gauge off baseline.  Deviation is scored over the injection phase only,
  // so nothing counts as affected and the validation-phase drift surfaces
  // in the recorded p-value, not in a verdict.
  auto deps = w.deps(100.0, 50.0, false);
  deps.start_injection = [&w](const syschaos::trace::ErrorModel&,
                              std::uint64_t) {
    auto h = std::make_unique<FakeInjection>(w.env);
    h->on_stop = [&w] { w.env.gauge_level = 70.0; };
    return h;
  };
  auto rec = orc::run_experiment(fast_config(), fake_profile(), deps);

  REQUIRE_FALSE(rec.invalid);
  REQUIRE(rec.outcome == orc::Outcome::invisible);
  const auto& load = finding(rec, "load");
  CHECK(load.observed == orc::Verdict::rejected);
  CHECK(load.recovered == orc::Verdict::skipped);
  REQUIRE(load.validation_p.has_value());
  CHECK(*load.validation_p < rec.alpha);
}

TEST_CASE("death while faults are armed is a crash with a fault count",
          "[orchestrator]") {
  Wiring w;
  w.env.death_elapsed = 35.0;  // 10 s into the injection phase
  auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                 w.deps(140.0, 10.0, true));

  REQUIRE_FALSE(rec.invalid);
  REQUIRE(rec.crashed);
  REQUIRE(rec.outcome == orc::Outcome::crash);
  REQUIRE(rec.crash_phase.has_value());
  CHECK(*rec.crash_phase == orc::Phase::injection);
  // The handle was stopped at the death tick: 3 injections/s over 10 s.
  CHECK(rec.injections_at_death == 30);
  CHECK(rec.injected == 30);
  // The run ended early: no recovery or validation time was spent.
  CHECK(rec.finished_at - rec.started_at == Catch::Approx(35.0));
  // A dead target leaves every hypothesis about its metrics untested.
  for (const auto& f : rec.findings) {
    CHECK(f.observed == orc::Verdict::skipped);
    CHECK(f.recovered == orc::Verdict::skipped);
    CHECK_FALSE(f.validation_p.has_value());
  }
}

TEST_CASE("death after injection still counts as a crash", "[orchestrator]") {
  Wiring w;
  w.env.death_elapsed = 50.0;  // during recovery (45..55)
  auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                 w.deps(140.0, 10.0, true));

  REQUIRE(rec.crashed);
  REQUIRE(rec.outcome == orc::Outcome::crash);
  CHECK(*rec.crash_phase == orc::Phase::recovery);
  // A crash voids every per-metric verdict, but the injection-phase
  // measurements taken before the death stay in the record as raw data.
  const auto& load = finding(rec, "load");
  CHECK(load.observed == orc::Verdict::skipped);
  CHECK(load.recovered == orc::Verdict::skipped);
  REQUIRE(load.injection_p.has_value());
  CHECK(*load.injection_p < rec.alpha);
}

TEST_CASE("death before injection invalidates the experiment",
          "[orchestrator]") {
  SECTION("during warm-up") {
    Wiring w;
    w.env.death_elapsed = 3.0;
    auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                   w.deps(140.0, 10.0, true));
    REQUIRE(rec.invalid);
    CHECK(rec.invalid_reason.find("warm-up") != std::string::npos);
    CHECK_FALSE(rec.outcome.has_value());
    CHECK_FALSE(rec.crashed);
    CHECK(w.sessions_started == 0);
  }
  SECTION("during pre-check") {
    Wiring w;
    w.env.death_elapsed = 10.0;
    auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                   w.deps(140.0, 10.0, true));
    REQUIRE(rec.invalid);
    CHECK(rec.invalid_reason.find("pre-check") != std::string::npos);
    CHECK(w.sessions_started == 0);
  }
}

TEST_CASE("metric off baseline at pre-check is excluded, not fatal",
          "[orchestrator]") {
  Wiring w;
  w.env.gauge_level = 200.0;  // the gauge drifted before the experiment
  // While armed only the counter rate shifts; stopping restores it and also
  // parks the gauge back at its (ignored) baseline.
  auto deps = w.deps(200.0, 10.0, false);
  deps.start_injection = [&w](const syschaos::trace::ErrorModel&,
                              std::uint64_t) {
    auto h = std::make_unique<FakeInjection>(w.env);
    w.env.ops_rate = 10.0;
    h->on_stop = [&w] { w.env.ops_rate = 50.0; };
    return h;
  };
  auto rec = orc::run_experiment(fast_config(), fake_profile(), deps);

  // The experiment proceeds on the remaining steady metric.
  REQUIRE_FALSE(rec.invalid);
  REQUIRE(rec.outcome == orc::Outcome::resilient);

  const auto& load = finding(rec, "load");
  CHECK_FALSE(load.precheck_passed);
  REQUIRE(load.precheck_p.has_value());
  CHECK(*load.precheck_p < rec.alpha);
  // Excluded metrics carry no further measurements or verdicts.
  CHECK_FALSE(load.injection_p.has_value());
  CHECK_FALSE(load.validation_p.has_value());
  CHECK(load.observed == orc::Verdict::skipped);
  CHECK(load.recovered == orc::Verdict::skipped);

  const auto& ops = finding(rec, "ops");
  CHECK(ops.precheck_passed);
  CHECK(ops.observed == orc::Verdict::holds);
  CHECK(ops.recovered == orc::Verdict::holds);

  const auto s = orc::summarize(rec.findings);
  CHECK(s.passed_precheck == 1);
  CHECK(s.affected == 1);
  CHECK(s.recovered == 1);
}

TEST_CASE("profile without steady metrics cannot host an experiment",
          "[orchestrator]") {
  Wiring w;
  auto prof = fake_profile();
  prof.metrics.clear();
  CHECK_THROWS_AS(
      orc::run_experiment(fast_config(), prof, w.deps(140.0, 10.0, true)),
      std::invalid_argument);
}

TEST_CASE("scoring thresholds gate the verdicts", "[orchestrator]") {
  SECTION("pre-check with too few points excludes every metric") {
    Wiring w;
    auto cfg = fast_config();
    cfg.min_phase_points = 25;  // every phase yields only 20 points
    auto rec = orc::run_experiment(cfg, fake_profile(),
                                   w.deps(140.0, 10.0, true));
    REQUIRE_FALSE(rec.invalid);
    // With nothing to measure, no deviation is visible.
    REQUIRE(rec.outcome == orc::Outcome::invisible);
    for (const auto& f : rec.findings) {
      CHECK_FALSE(f.precheck_passed);
      CHECK(f.observed == orc::Verdict::skipped);
    }
    CHECK(orc::summarize(rec.findings).passed_precheck == 0);
  }
  SECTION("undecidable injection phase leaves deviation unscored") {
    Wiring w;
    auto cfg = fast_config();
    cfg.durations = {5, 30, 20, 10, 30};
    cfg.min_phase_points = 25;  // pre-check/validation: 30 pts; injection: 20
    auto rec = orc::run_experiment(cfg, fake_profile(),
                                   w.deps(140.0, 10.0, true));
    REQUIRE_FALSE(rec.invalid);
    REQUIRE(rec.outcome == orc::Outcome::invisible);
    for (const auto& f : rec.findings) {
      CHECK(f.precheck_passed);
      CHECK_FALSE(f.injection_p.has_value());
      CHECK(f.observed == orc::Verdict::skipped);
      CHECK(f.recovered == orc::Verdict::skipped);
    }
  }
}

TEST_CASE("outcome table over survival, deviation, and recovery",
          "[orchestrator]") {
  using orc::classify_outcome;
  using orc::Outcome;
  // crash dominates everything
  CHECK(classify_outcome(true, 0, 0, 0) == Outcome::crash);
  CHECK(classify_outcome(true, 3, 3, 0) == Outcome::crash);
  // no deviation observed
  CHECK(classify_outcome(false, 0, 0, 0) == Outcome::invisible);
  // every affected metric recovered / none did
  CHECK(classify_outcome(false, 3, 3, 0) == Outcome::resilient);
  CHECK(classify_outcome(false, 3, 0, 3) == Outcome::long_term);
  // partial recovery, and recovery undecidable for some affected metric
  CHECK(classify_outcome(false, 3, 2, 1) == Outcome::mixed);
  CHECK(classify_outcome(false, 3, 1, 0) == Outcome::mixed);
  CHECK(classify_outcome(false, 3, 0, 2) == Outcome::mixed);
}

TEST_CASE("malformed configuration is rejected up front", "[orchestrator]") {
  Wiring w;
  auto deps = w.deps(140.0, 10.0, true);
  auto prof = fake_profile();

  SECTION("alpha outside (0, 1)") {
    auto cfg = fast_config();
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(orc::run_experiment(cfg, prof, deps),
                    std::invalid_argument);
  }
  SECTION("phase not a multiple of the scrape interval") {
    auto cfg = fast_config();
    prof.interval_seconds = 3;
    CHECK_THROWS_AS(orc::run_experiment(cfg, prof, deps),
                    std::invalid_argument);
  }
  SECTION("syscall outside the injectable set") {
    auto cfg = fast_config();
    cfg.model.syscall = "getpid";
    CHECK_THROWS_AS(orc::run_experiment(cfg, prof, deps),
                    std::invalid_argument);
  }
  SECTION("missing dependencies") {
    auto cfg = fast_config();
    auto broken = deps;
    broken.clock = nullptr;
    CHECK_THROWS_AS(orc::run_experiment(cfg, prof, broken),
                    std::invalid_argument);
  }
}

TEST_CASE("experiment records survive the JSON round trip", "[orchestrator]") {
  TempDir dir;

  SECTION("full five-phase record") {
    Wiring w;
    auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                   w.deps(140.0, 10.0, true));
    const auto path = dir.path / "resilient.json";
    orc::save_record(rec, path);
    const auto back = orc::load_record(path);

    CHECK(back.target_id == rec.target_id);
    CHECK(back.model.label() == rec.model.label());
    CHECK(back.model.rate == rec.model.rate);
    CHECK(back.seed == rec.seed);
    CHECK(back.alpha == rec.alpha);
    CHECK(back.durations.warmup_seconds == rec.durations.warmup_seconds);
    CHECK(back.durations.validation_seconds ==
          rec.durations.validation_seconds);
    CHECK(back.interval_seconds == rec.interval_seconds);
    CHECK(back.started_at == rec.started_at);
    CHECK(back.finished_at == rec.finished_at);
    CHECK(back.invalid == rec.invalid);
    CHECK(back.crashed == rec.crashed);
    CHECK(back.injected == rec.injected);
    CHECK(back.intercepted == rec.intercepted);
    REQUIRE(back.outcome.has_value());
    CHECK(*back.outcome == *rec.outcome);
    REQUIRE(back.findings.size() == rec.findings.size());
    for (std::size_t i = 0; i < back.findings.size(); ++i) {
      CHECK(back.findings[i].name == rec.findings[i].name);
      CHECK(back.findings[i].kind == rec.findings[i].kind);
      CHECK(back.findings[i].precheck_passed ==
            rec.findings[i].precheck_passed);
      CHECK(back.findings[i].observed == rec.findings[i].observed);
      CHECK(back.findings[i].recovered == rec.findings[i].recovered);
      REQUIRE(back.findings[i].injection_p.has_value());
      CHECK(*back.findings[i].injection_p ==
            Catch::Approx(*rec.findings[i].injection_p));
    }
  }

  SECTION("crash record keeps phase and death count") {
    Wiring w;
    w.env.death_elapsed = 35.0;
    auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                   w.deps(140.0, 10.0, true));
    const auto path = dir.path / "crash.json";
    orc::save_record(rec, path);
    const auto back = orc::load_record(path);
    REQUIRE(back.crashed);
    REQUIRE(back.crash_phase.has_value());
    CHECK(*back.crash_phase == orc::Phase::injection);
    CHECK(back.injections_at_death == rec.injections_at_death);
    REQUIRE(back.outcome.has_value());
    CHECK(*back.outcome == orc::Outcome::crash);
  }

  SECTION("invalid record keeps its reason") {
    Wiring w;
    w.env.death_elapsed = 3.0;
    auto rec = orc::run_experiment(fast_config(), fake_profile(),
                                   w.deps(140.0, 10.0, true));
    const auto path = dir.path / "invalid.json";
    orc::save_record(rec, path);
    const auto back = orc::load_record(path);
    REQUIRE(back.invalid);
    CHECK(back.invalid_reason == rec.invalid_reason);
    CHECK_FALSE(back.outcome.has_value());
  }
}

TEST_CASE("truncated collection stops at the death tick", "[orchestrator]") {
  // collect_scrape_log with a liveness hook must come back short rather
  // than blocking out the window or padding with garbage.
  VirtualClock clock;
  const double t0 = to_unix_seconds(clock.now());
  int calls = 0;
  syschaos::metrics::ScrapeFn scrape = [&] {
    ++calls;
    syschaos::prom::Exposition exp;
    exp.samples["x"] = 1.0;
    return std::optional<syschaos::prom::Exposition>(std::move(exp));
  };
  auto alive = [&] { return to_unix_seconds(clock.now()) - t0 < 6.5; };

  auto log = syschaos::metrics::collect_scrape_log(scrape, clock, "t", 1, 20,
                                                   alive);
  CHECK_FALSE(syschaos::metrics::scrape_log_complete(log));
  CHECK(log.records.size() == 7);  // ticks 0..6; the t=7 check fails
  CHECK(calls == 7);
  CHECK(to_unix_seconds(clock.now()) - t0 == Catch::Approx(7.0));

  // Without the hook the same schedule runs to completion.
  VirtualClock clock2;
  auto full = syschaos::metrics::collect_scrape_log(scrape, clock2, "t", 1, 20);
  CHECK(syschaos::metrics::scrape_log_complete(full));
  CHECK(full.records.size() == 21);
}
