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
#include <chrono>
#include <fstream>
#include <thread>

#include "support/tempdir.hpp"
#include "support/toyproc.hpp"
#include "syschaos/tracer.hpp"

using namespace syschaos;
using Catch::Approx;

namespace {

sim::BehaviorScript base_script(const std::string& id) {
  sim::BehaviorScript s;
  s.target_id = id;
  s.seed = 11;
  sim::GaugeSpec g;
  g.name = "toy_quality_score";
  g.affected_by_degrade = true;
  s.gauges.push_back(g);
  return s;
}

double flat_value(const prom::Exposition& e, const std::string& flat_name) {
  const auto it = e.samples.find(flat_name);
  REQUIRE(it != e.samples.end());
  return it->second;
}

}  // namespace

TEST_CASE("scrape returns flattened labeled series with type hints", "[toy]") {
  TempDir tmp;
  auto script = base_script("scrape-check");
  sim::WorkloadSpec w;
  w.kind = "file_read";
  w.ops_per_second = 100;
  script.workloads.push_back(w);
  ToyProc toy(tmp.path, script);
  toy.await_ready();

  const auto got = scrape::fetch(toy.endpoint());
  REQUIRE(got.has_value());
  CHECK(got->samples.count("toy_uptime_seconds") == 1);
  CHECK(got->samples.count("toy_quality_score") == 1);
  // Labels arrive flattened into dotted series names.
  CHECK(got->samples.count("toy_ops_total.workload.file_read") == 1);
  REQUIRE(got->type_hints.count("toy_ops_total") == 1);
  CHECK(got->type_hints.at("toy_ops_total") == "counter");
  CHECK(got->type_hints.at("toy_uptime_seconds") == "gauge");
}

TEST_CASE("tracer accounting matches the target's own syscall counters",
          "[toy]") {
  TempDir tmp;
  auto script = base_script("accounting");
  sim::WorkloadSpec w;
  w.kind = "file_read";
  w.ops_per_second = 120;
  script.workloads.push_back(w);
  ToyProc toy(tmp.path, script);
  toy.await_ready();

  // Counter snapshot, traced window, counter snapshot: the scrapes sit just
  // outside the window, so the delta can only exceed the traced count by
  // the few ops landing in the gaps.
  const auto before = scrape::fetch(toy.endpoint());
  REQUIRE(before.has_value());
  const auto stats = trace::monitor_syscalls(toy.proc->pid(),
                                             std::chrono::milliseconds(2000));
  const auto after = scrape::fetch(toy.endpoint());
  REQUIRE(after.has_value());

  const double delta = flat_value(*after, "toy_syscall_total.syscall.read") -
                       flat_value(*before, "toy_syscall_total.syscall.read");
  REQUIRE(stats.by_syscall.count("read") == 1);
  const auto traced = static_cast<double>(stats.by_syscall.at("read").invocations);
  // ~240 reads in the window; allow the gap ops plus 5% slack.
  CHECK(traced <= delta + 1.0);
  CHECK(delta <= traced + std::max(12.0, 0.05 * traced) + 1.0);

  toy.proc->terminate();
}

TEST_CASE("injection reaches only the modeled syscall across all threads",
          "[toy]") {
  TempDir tmp;
  auto script = base_script("spread");
  for (const char* kind : {"file_read", "file_write", "tcp_accept"}) {
    sim::WorkloadSpec w;
    w.kind = kind;
    w.ops_per_second = 80;
    script.workloads.push_back(w);
  }
  ToyProc toy(tmp.path, script);
  toy.await_ready();

  trace::ErrorModel model;
  model.syscall = "read";
  model.error = "ECONNRESET";
  model.rate = 1.0;
  trace::SessionOptions opts;
  trace::InjectionSession session(toy.proc->pid(), model, 99, std::move(opts));
  std::this_thread::sleep_for(std::chrono::milliseconds(1200));
  session.stop();
  const auto& result = session.result();

  CHECK(result.injected > 20);
  const auto after = scrape::fetch(toy.endpoint());
  REQUIRE(after.has_value());
  // The victim syscall shows the injected errno; sibling workloads on other
  // syscalls never see it and keep making progress.
  CHECK(flat_value(
            *after,
            "toy_syscall_errors_total.errno.ECONNRESET.syscall.read") > 10);
  CHECK(after->samples.count("toy_syscall_errors_total.errno.ECONNRESET.syscall.write") == 0);
  CHECK(flat_value(*after, "toy_syscall_total.syscall.write") > 50);
  CHECK(flat_value(*after, "toy_syscall_total.syscall.accept4") > 5);

  toy.proc->terminate();
}

TEST_CASE("crash reaction kills the process when the modeled error lands",
          "[toy]") {
  TempDir tmp;
  auto script = base_script("crasher");
  sim::WorkloadSpec w;
  w.kind = "file_write";
  w.ops_per_second = 100;
  sim::Reaction r;
  r.kind = sim::Reaction::Kind::crash;
  w.reactions["write:EPIPE"] = r;
  script.workloads.push_back(w);
  ToyProc toy(tmp.path, script);
  toy.await_ready();

  trace::ErrorModel model;
  model.syscall = "write";
  model.error = "EPIPE";
  model.rate = 1.0;
  trace::SessionOptions opts;
  trace::InjectionSession session(toy.proc->pid(), model, 5, std::move(opts));

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (toy.proc->running() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  session.stop();
  const auto& result = session.result();
  CHECK(result.target_exited);
  toy.proc->note_reaped(result.target_exit_status);
  const auto info = toy.proc->exit_info();
  REQUIRE(info.has_value());
  if (info->kind != ExitInfo::Kind::unknown) {
    CHECK(info->kind == ExitInfo::Kind::clean);
    CHECK(info->value == 42);
  }
}

TEST_CASE("degrade reaction latches the quality gauges", "[toy]") {
  TempDir tmp;
  auto script = base_script("degrader");
  sim::WorkloadSpec w;
  w.kind = "file_read";
  w.ops_per_second = 100;
  sim::Reaction r;
  r.kind = sim::Reaction::Kind::degrade;
  w.reactions["read:ECONNRESET"] = r;
  script.workloads.push_back(w);
  ToyProc toy(tmp.path, script);
  toy.await_ready();

  const auto healthy = scrape::fetch(toy.endpoint());
  REQUIRE(healthy.has_value());
  CHECK(flat_value(*healthy, "toy_quality_score") > 90.0);

  {
    trace::ErrorModel model;
    model.syscall = "read";
    model.error = "ECONNRESET";
    model.rate = 1.0;
    trace::SessionOptions opts;
    trace::InjectionSession session(toy.proc->pid(), model, 7, std::move(opts));
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    session.stop();
    REQUIRE(session.result().injected > 0);
  }

  // The latch holds after injection ends: still degraded on a later scrape.
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  const auto after = scrape::fetch(toy.endpoint());
  REQUIRE(after.has_value());
  CHECK(flat_value(*after, "toy_quality_score") < 50.0);

  toy.proc->terminate();
}
