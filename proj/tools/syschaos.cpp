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

// Command-line front end for the fault-injection study workflow:
//
//   syschaos probe                         check tracing capabilities
//   syschaos monitor     --pid ...         observe natural syscall errors
//   syschaos profile     --metrics-port .. find steady-state metrics
//   syschaos synthesize  --target-id ...   turn observations into models
//   syschaos experiment  --pid ...         run one fault-injection experiment
//   syschaos benchmark   --target-id a b   intersect model sets across targets
//   syschaos report      --target-id ...   render markdown (and SVG timelines)
//
// Exit codes: 0 success, 1 usage error, 2 missing privileges or broken
// setup, 3 experiment invalidated before injection.

#include <sys/types.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "syschaos/clock.hpp"
#include "syschaos/error_model.hpp"
#include "syschaos/layout.hpp"
#include "syschaos/logging.hpp"
#include "syschaos/metrics.hpp"
#include "syschaos/models.hpp"
#include "syschaos/orchestrator.hpp"
#include "syschaos/process.hpp"
#include "syschaos/profile.hpp"
#include "syschaos/report.hpp"
#include "syschaos/scrape.hpp"
#include "syschaos/syscall_stats.hpp"
#include "syschaos/tracer.hpp"

namespace fs = std::filesystem;
using namespace syschaos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSetup = 2;
constexpr int kExitInvalidated = 3;

// Failure with a chosen process exit code; everything else maps to usage.
struct Failure {
  int code;
  std::string message;
};

struct EndpointFlags {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string path = "/metrics";

  void attach(CLI::App* cmd, bool required) {
    auto* p = cmd->add_option("--metrics-port", port,
                              "port of the target's metrics endpoint");
    if (required) p->required();
    cmd->add_option("--metrics-host", host, "metrics host")
        ->capture_default_str();
    cmd->add_option("--metrics-path", path, "metrics URL path")
        ->capture_default_str();
  }

  scrape::Endpoint endpoint() const {
    scrape::Endpoint ep;
    ep.host = host;
    ep.port = port;
    ep.path = path;
    return ep;
  }
};

fs::path require_file(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) {
    throw Failure{kExitSetup, p.string() + " does not exist; " + hint};
  }
  return p;
}

// ---------------------------------------------------------------------------
// probe

int cmd_probe() {
  const auto report = trace::probe_capabilities();
  const auto line = [](const char* what, bool ok) {
    std::cout << "  " << what << ": " << (ok ? "ok" : "MISSING") << "\n";
  };
  std::cout << "tracing capabilities:\n";
  line("architecture (x86_64)", report.arch_supported);
  line("ptrace attach", report.attach_ok);
  line("syscall stop info", report.syscall_info_ok);
  line("return rewriting", report.rewrite_ok);
  if (!report.detail.empty()) std::cout << "  detail: " << report.detail << "\n";
  if (!report.available()) {
    std::cout << "injection is NOT available in this environment\n";
    return kExitSetup;
  }
  std::cout << "injection is available\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// monitor

struct MonitorArgs {
  pid_t pid = 0;
  int duration = 60;
  std::string target_id;
  std::string data_dir;
  std::string out;
};

int cmd_monitor(const MonitorArgs& a) {
  const auto stats = trace::monitor_syscalls(
      a.pid, std::chrono::milliseconds(static_cast<long>(a.duration) * 1000),
      a.target_id);

  const auto layout = DataLayout::resolve(a.data_dir);
  const fs::path out = a.out.empty() ? layout.stats(a.target_id) : fs::path(a.out);
  trace::save_stats(stats, out);

  std::cout << "monitored pid " << a.pid << " for " << stats.window_seconds
            << "s: " << stats.total_invocations() << " syscalls, "
            << stats.total_errors() << " natural errors"
            << (stats.truncated ? " (target exited early)" : "") << "\n";
  std::vector<std::pair<std::string, const trace::SyscallStats::PerSyscall*>>
      rows;
  for (const auto& [name, per] : stats.by_syscall) rows.emplace_back(name, &per);
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    return x.second->invocations > y.second->invocations;
  });
  const std::size_t shown = std::min<std::size_t>(rows.size(), 12);
  for (std::size_t i = 0; i < shown; ++i) {
    std::cout << "  " << rows[i].first << ": " << rows[i].second->invocations;
    if (rows[i].second->error_total() > 0) {
      std::cout << " (";
      bool first = true;
      for (const auto& [err, n] : rows[i].second->errors) {
        if (!first) std::cout << ", ";
        std::cout << err << " x" << n;
        first = false;
      }
      std::cout << ")";
    }
    std::cout << "\n";
  }
  std::cout << "stats: " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// profile

struct ProfileArgs {
  std::string target_id;
  EndpointFlags endpoint;
  int interval = 15;
  int duration = 300;  // per epoch
  double alpha = 0.01;
  pid_t pid = 0;  // optional: abort when this process dies
  std::string data_dir;
};

int cmd_profile(const ProfileArgs& a) {
  SystemClock clock;
  const auto scraper = scrape::make_scraper(a.endpoint.endpoint());
  std::function<bool()> alive;
  if (a.pid > 0) {
    alive = [pid = a.pid] { return process_alive(pid); };
  }

  const auto layout = DataLayout::resolve(a.data_dir);
  metrics::ScrapeLog logs[2];
  for (int i = 0; i < 2; ++i) {
    logs[i] = metrics::collect_scrape_log(scraper, clock, a.target_id,
                                          a.interval, a.duration, alive);
    if (!metrics::scrape_log_complete(logs[i])) {
      throw Failure{kExitSetup, "target died while profiling epoch " +
                                    std::to_string(i + 1)};
    }
    metrics::save_scrape_log(
        logs[i], layout.scrape_log(a.target_id,
                                   "profile-epoch" + std::to_string(i + 1)));
  }

  const auto e1 = metrics::build_epoch(logs[0]);
  const auto e2 = metrics::build_epoch(logs[1]);
  const auto prof = profile::infer_steady_state(e1, e2, a.alpha);
  profile::save_profile(prof, layout.profile(a.target_id));

  std::cout << "profiled " << a.target_id << ": total=" << prof.total_count()
            << " active=" << prof.active_count()
            << " steady=" << prof.steady_count() << " (alpha=" << a.alpha
            << ", interval=" << a.interval << "s, epoch=" << a.duration
            << "s)\n";
  std::cout << "profile: " << layout.profile(a.target_id).string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthesizeArgs {
  std::string target_id;
  std::string data_dir;
  std::string stats_path;
  std::string out;
  models::SynthesisParams params;
  std::vector<std::string> extra_syscalls;
};

int cmd_synthesize(SynthesizeArgs a) {
  const auto layout = DataLayout::resolve(a.data_dir);
  const fs::path stats_path = a.stats_path.empty()
                                  ? layout.stats(a.target_id)
                                  : fs::path(a.stats_path);
  require_file(stats_path, "run `syschaos monitor` first");
  const auto stats = trace::load_stats(stats_path);

  a.params.extra_syscalls.insert(a.extra_syscalls.begin(),
                                 a.extra_syscalls.end());
  const auto models_out = models::synthesize(stats, a.params);
  const fs::path out =
      a.out.empty() ? layout.models(a.target_id) : fs::path(a.out);
  trace::save_models(models_out, out);

  std::cout << "synthesized " << models_out.size() << " model(s) from "
            << stats_path.string() << ":\n";
  for (const auto& m : models_out) {
    std::cout << "  " << m.label() << " rate=" << m.rate;
    if (m.provenance) {
      std::cout << " (natural=" << m.provenance->natural_rate << " x"
                << m.provenance->amplification;
      if (m.provenance->clamped_to_floor) std::cout << ", floored";
      if (m.provenance->clamped_to_cap) std::cout << ", capped";
      std::cout << ")";
    }
    std::cout << "\n";
  }
  std::cout << "models: " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string target_id;
  pid_t pid = 0;
  EndpointFlags endpoint;
  std::string model_label;  // "syscall/ERRNO" looked up in models.json
  std::string syscall;
  std::string error;
  double rate = -1.0;
  std::uint64_t seed = 1;
  double alpha = 0.01;
  orchestrate::Durations durations;
  int min_points = 10;
  std::vector<std::string> extra_syscalls;
  std::string label;
  std::string data_dir;
  std::string record_out;
  std::string interception_log;
};

class LiveInjection final : public orchestrate::InjectionHandle {
 public:
  LiveInjection(pid_t pid, const trace::ErrorModel& model, std::uint64_t seed,
                trace::SessionOptions options)
      : session_(pid, model, seed, std::move(options)) {}
  void stop() override { session_.stop(); }
  std::uint64_t injected() const override { return session_.injected(); }
  std::uint64_t intercepted() const override { return session_.intercepted(); }
  bool target_exited() const override { return session_.target_exited(); }

 private:
  trace::InjectionSession session_;
};

trace::ErrorModel resolve_model(const ExperimentArgs& a,
                                const DataLayout& layout) {
  trace::ErrorModel model;
  if (!a.model_label.empty()) {
    const auto slash = a.model_label.find('/');
    if (slash == std::string::npos) {
      throw Failure{kExitUsage, "--model expects SYSCALL/ERRNO"};
    }
    const std::string syscall = a.model_label.substr(0, slash);
    const std::string error = a.model_label.substr(slash + 1);
    const auto models_path =
        require_file(layout.models(a.target_id),
                     "run `syschaos synthesize` first or pass "
                     "--syscall/--error/--rate");
    for (const auto& m : trace::load_models(models_path)) {
      if (m.syscall == syscall && m.error == error) {
        model = m;
        break;
      }
    }
    if (model.syscall.empty()) {
      throw Failure{kExitUsage,
                    "model " + a.model_label + " not found in " +
                        models_path.string()};
    }
    if (a.rate >= 0.0) model.rate = a.rate;  // explicit override
  } else {
    if (a.syscall.empty() || a.error.empty() || a.rate < 0.0) {
      throw Failure{kExitUsage,
                    "need either --model or all of --syscall, --error, --rate"};
    }
    model.syscall = a.syscall;
    model.error = a.error;
    model.rate = a.rate;
  }
  return model;
}

int cmd_experiment(const ExperimentArgs& a) {
  const auto layout = DataLayout::resolve(a.data_dir);
  const auto profile_path =
      require_file(layout.profile(a.target_id), "run `syschaos profile` first");
  const auto prof = profile::load_profile(profile_path);
  if (prof.steady_count() == 0) {
    throw Failure{kExitSetup,
                  "profile for " + a.target_id +
                      " has no steady metrics; re-profile with a longer epoch "
                      "or a higher alpha"};
  }

  orchestrate::ExperimentConfig cfg;
  cfg.model = resolve_model(a, layout);
  cfg.seed = a.seed;
  cfg.alpha = a.alpha;
  cfg.durations = a.durations;
  cfg.min_phase_points = a.min_points;
  cfg.extra_syscalls.insert(a.extra_syscalls.begin(), a.extra_syscalls.end());

  log::EventLog events(std::cerr);
  SystemClock clock;
  orchestrate::RunnerDeps deps;
  deps.scrape = scrape::make_scraper(a.endpoint.endpoint());
  deps.target_alive = [pid = a.pid] { return process_alive(pid); };
  deps.start_injection = [&](const trace::ErrorModel& model,
                             std::uint64_t seed) {
    trace::SessionOptions options;
    if (!a.interception_log.empty()) {
      options.interception_log = fs::path(a.interception_log);
    }
    return std::make_unique<LiveInjection>(a.pid, model, seed,
                                           std::move(options));
  };
  deps.clock = &clock;
  deps.events = &events;

  const auto record = orchestrate::run_experiment(cfg, prof, std::move(deps));

  const std::string label =
      a.label.empty() ? cfg.model.syscall + "-" + cfg.model.error + "-seed" +
                            std::to_string(cfg.seed)
                      : a.label;
  const fs::path out = a.record_out.empty()
                           ? layout.experiment_record(a.target_id, label)
                           : fs::path(a.record_out);
  orchestrate::save_record(record, out);

  if (record.invalid) {
    std::cout << "invalid: " << record.invalid_reason << "\n";
    std::cout << "record: " << out.string() << "\n";
    return kExitInvalidated;
  }
  std::cout << "outcome: "
            << (record.outcome ? orchestrate::to_string(*record.outcome) : "?")
            << "\n";
  std::cout << "injected " << record.injected << " of " << record.intercepted
            << " intercepted calls\n";
  if (record.crashed && record.crash_phase) {
    std::cout << "target died during " << orchestrate::to_string(*record.crash_phase)
              << " after " << record.injections_at_death << " injections\n";
  }
  std::cout << "record: " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
  std::vector<std::string> target_ids;
  std::string data_dir;
  std::string out;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  const auto layout = DataLayout::resolve(a.data_dir);
  std::map<std::string, std::vector<trace::ErrorModel>> per_target;
  for (const auto& t : a.target_ids) {
    const auto path =
        require_file(layout.models(t), "run `syschaos synthesize` for " + t);
    per_target[t] = trace::load_models(path);
  }
  const auto common = models::common_models(per_target);
  const fs::path out = a.out.empty() ? layout.root() / "common-models.json"
                                     : fs::path(a.out);
  trace::save_models(common, out);

  std::cout << common.size() << " model(s) shared by all " << a.target_ids.size()
            << " target(s):\n";
  for (const auto& m : common) {
    std::cout << "  " << m.label() << " rate=" << m.rate << "\n";
  }
  std::cout << "models: " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> target_ids;
  std::string data_dir;
  bool benchmark = false;
  bool summary_only = false;
  bool plots = false;
  std::string out;
  std::string json_out;
  std::string title;
};

std::vector<orchestrate::ExperimentRecord> load_records(
    const DataLayout& layout, const std::string& target_id) {
  std::vector<fs::path> files;
  const auto dir = layout.target_dir(target_id) / "experiments";
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<orchestrate::ExperimentRecord> records;
  records.reserve(files.size());
  for (const auto& f : files) records.push_back(orchestrate::load_record(f));
  return records;
}

int cmd_report(const ReportArgs& a) {
  const auto layout = DataLayout::resolve(a.data_dir);
  report::Report rep;
  SystemClock clock;
  rep.generated_at = to_unix_seconds(clock.now());
  for (const auto& t : a.target_ids) {
    auto records = load_records(layout, t);
    rep.experiments.insert(rep.experiments.end(),
                           std::make_move_iterator(records.begin()),
                           std::make_move_iterator(records.end()));
  }
  if (!a.title.empty()) {
    rep.title = a.title;
  } else if (a.benchmark) {
    rep.title = "Cross-target fault benchmark";
  } else if (a.target_ids.size() == 1) {
    rep.title = "Fault injection report: " + a.target_ids.front();
  }

  fs::path out;
  if (!a.out.empty()) {
    out = a.out;
  } else if (a.benchmark) {
    out = layout.root() / "benchmark.md";
  } else {
    out = layout.target_dir(a.target_ids.front()) / "report.md";
  }

  std::string markdown;
  if (a.benchmark) {
    markdown = report::render_benchmark_markdown(rep);
  } else {
    report::RenderOptions opts;
    opts.summary_only = a.summary_only;
    if (a.plots) {
      const fs::path plot_dir = out.parent_path() / "plots";
      for (const auto& r : rep.experiments) {
        if (r.invalid) continue;
        report::save_text(report::render_timeline_svg(r),
                          plot_dir / report::plot_filename(r));
      }
      opts.plot_dir = "plots";
    }
    markdown = report::render_markdown(rep, opts);
  }
  report::save_text(markdown, out);
  if (!a.json_out.empty()) report::save_report(rep, a.json_out);

  std::cout << "report over " << rep.experiments.size() << " experiment(s): "
            << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"syscall-level fault injection for long-running services"};
  app.require_subcommand(1);

  auto* probe = app.add_subcommand("probe", "check tracing capabilities");

  MonitorArgs mon;
  auto* monitor =
      app.add_subcommand("monitor", "observe natural syscall error rates");
  monitor->add_option("--pid", mon.pid, "target process id")->required();
  monitor->add_option("--duration", mon.duration, "window in seconds")
      ->capture_default_str();
  monitor->add_option("--target-id", mon.target_id, "name for the target")
      ->required();
  monitor->add_option("--data-dir", mon.data_dir, "data directory");
  monitor->add_option("--out", mon.out, "stats output path override");

  ProfileArgs prof;
  auto* profile_cmd =
      app.add_subcommand("profile", "find steady-state metrics");
  profile_cmd->add_option("--target-id", prof.target_id, "name for the target")
      ->required();
  prof.endpoint.attach(profile_cmd, /*required=*/true);
  profile_cmd->add_option("--interval", prof.interval, "scrape interval (s)")
      ->capture_default_str();
  profile_cmd
      ->add_option("--duration", prof.duration, "duration of one epoch (s)")
      ->capture_default_str();
  profile_cmd->add_option("--alpha", prof.alpha, "significance level")
      ->capture_default_str();
  profile_cmd->add_option("--pid", prof.pid,
                          "optional: stop if this process dies");
  profile_cmd->add_option("--data-dir", prof.data_dir, "data directory");

  SynthesizeArgs syn;
  auto* synthesize =
      app.add_subcommand("synthesize", "derive error models from stats");
  synthesize->add_option("--target-id", syn.target_id, "name for the target")
      ->required();
  synthesize->add_option("--data-dir", syn.data_dir, "data directory");
  synthesize->add_option("--stats", syn.stats_path, "stats path override");
  synthesize->add_option("--out", syn.out, "models output path override");
  synthesize
      ->add_option("--amplification", syn.params.amplification,
                   "natural-rate multiplier")
      ->capture_default_str();
  synthesize->add_option("--floor", syn.params.floor, "minimum rate")
      ->capture_default_str();
  synthesize->add_option("--cap", syn.params.cap, "maximum rate")
      ->capture_default_str();
  synthesize->add_option("--extra-syscall", syn.extra_syscalls,
                         "extra injectable syscall (repeatable)");

  ExperimentArgs exp;
  auto* experiment =
      app.add_subcommand("experiment", "run one fault-injection experiment");
  experiment->add_option("--target-id", exp.target_id, "name for the target")
      ->required();
  experiment->add_option("--pid", exp.pid, "target process id")->required();
  exp.endpoint.attach(experiment, /*required=*/true);
  experiment->add_option("--model", exp.model_label,
                         "SYSCALL/ERRNO from the synthesized models");
  experiment->add_option("--syscall", exp.syscall, "syscall to inject into");
  experiment->add_option("--error", exp.error, "errno name to inject");
  experiment->add_option("--rate", exp.rate, "injection probability [0,1]");
  experiment->add_option("--seed", exp.seed, "RNG seed")->capture_default_str();
  experiment->add_option("--alpha", exp.alpha, "significance level")
      ->capture_default_str();
  experiment
      ->add_option("--warmup", exp.durations.warmup_seconds, "warm-up (s)")
      ->capture_default_str();
  experiment
      ->add_option("--precheck", exp.durations.precheck_seconds,
                   "pre-check epoch (s)")
      ->capture_default_str();
  experiment
      ->add_option("--injection", exp.durations.injection_seconds,
                   "injection epoch (s)")
      ->capture_default_str();
  experiment
      ->add_option("--recovery", exp.durations.recovery_seconds,
                   "recovery wait (s)")
      ->capture_default_str();
  experiment
      ->add_option("--validation", exp.durations.validation_seconds,
                   "validation epoch (s)")
      ->capture_default_str();
  experiment
      ->add_option("--min-points", exp.min_points,
                   "minimum points to score a phase")
      ->capture_default_str();
  experiment->add_option("--extra-syscall", exp.extra_syscalls,
                         "extra injectable syscall (repeatable)");
  experiment->add_option("--label", exp.label, "record name override");
  experiment->add_option("--data-dir", exp.data_dir, "data directory");
  experiment->add_option("--record-out", exp.record_out,
                         "record output path override");
  experiment->add_option("--interception-log", exp.interception_log,
                         "per-interception ndjson log path");

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand(
      "benchmark", "intersect synthesized model sets across targets");
  benchmark
      ->add_option("--target-id", bench.target_ids,
                   "target name (give at least two)")
      ->required()
      ->expected(2, -1);
  benchmark->add_option("--data-dir", bench.data_dir, "data directory");
  benchmark->add_option("--out", bench.out, "output path override");

  ReportArgs rep;
  auto* report_cmd =
      app.add_subcommand("report", "render experiment records to markdown");
  report_cmd
      ->add_option("--target-id", rep.target_ids, "target name (repeatable)")
      ->required()
      ->expected(1, -1);
  report_cmd->add_option("--data-dir", rep.data_dir, "data directory");
  report_cmd->add_flag("--benchmark", rep.benchmark,
                       "side-by-side view across targets");
  report_cmd->add_flag("--summary-only", rep.summary_only,
                       "omit per-metric detail sections");
  report_cmd->add_flag("--plots", rep.plots, "write SVG timelines next to it");
  report_cmd->add_option("--out", rep.out, "markdown output path");
  report_cmd->add_option("--json", rep.json_out, "also save the JSON bundle");
  report_cmd->add_option("--title", rep.title, "report title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (probe->parsed()) return cmd_probe();
    if (monitor->parsed()) return cmd_monitor(mon);
    if (profile_cmd->parsed()) return cmd_profile(prof);
    if (synthesize->parsed()) return cmd_synthesize(syn);
    if (experiment->parsed()) return cmd_experiment(exp);
    if (benchmark->parsed()) return cmd_benchmark(bench);
    if (report_cmd->parsed()) return cmd_report(rep);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const trace::PrivilegeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSetup;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
