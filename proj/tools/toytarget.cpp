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

// Scriptable workload process used as the experiment subject in tests and
// demos.  Runs the behavior script until SIGTERM/SIGINT, logging structured
// events to stderr.
//
//   toytarget --script behavior.json [--port 9100] [--target-id node-1]

#include <signal.h>

#include <atomic>
#include <string>

#include <CLI11.hpp>

#include "syschaos/logging.hpp"
#include "syschaos/sim.hpp"

namespace {

std::atomic<bool> g_stop{false};

void request_stop(int) { g_stop.store(true, std::memory_order_relaxed); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scriptable syscall workload with a metrics endpoint"};
  std::string script_path;
  int port_override = 0;
  std::string id_override;
  std::uint64_t seed_override = 0;
  app.add_option("--script", script_path, "behavior script (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--port", port_override, "override the script's metrics port");
  app.add_option("--target-id", id_override, "override the script's target id");
  app.add_option("--seed", seed_override, "override the script's RNG seed");
  CLI11_PARSE(app, argc, argv);

  syschaos::log::EventLog events;
  syschaos::sim::BehaviorScript script;
  try {
    script = syschaos::sim::load_script(script_path);
  } catch (const std::exception& e) {
    events.emit("fatal", {{"error", e.what()}});
    return 1;
  }
  if (port_override != 0) script.metrics_port = port_override;
  if (!id_override.empty()) script.target_id = id_override;
  if (seed_override != 0) script.seed = seed_override;

  struct sigaction sa{};
  sa.sa_handler = request_stop;
  ::sigaction(SIGTERM, &sa, nullptr);
  ::sigaction(SIGINT, &sa, nullptr);

  syschaos::sim::ToyTarget target(std::move(script), events);
  return target.run(g_stop);
}
