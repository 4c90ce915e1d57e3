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

#include <atomic>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <dirent.h>
#include <fcntl.h>
#include <sys/ptrace.h>
// Kernel header after the libc one: provides ptrace_syscall_info and the
// PTRACE_SYSCALL_INFO_* discriminators, which this libc does not expose.
#include <linux/ptrace.h>
#include <sys/syscall.h>
#include <sys/uio.h>
#include <sys/user.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "syschaos/clock.hpp"
#include "syschaos/error_model.hpp"
#include "syschaos/syscall_stats.hpp"
#include "syschaos/syscalls.hpp"

// Syscall interception: the mechanism under everything else.
//
// A session attaches to a running process (all of its threads, plus any it
// spawns while attached) with PTRACE_SEIZE and traces syscall entries and
// exits.  At each syscall *exit* the session:
//
//   1. counts the invocation and, if the kernel returned -errno, the natural
//      failure (this is the monitoring product);
//   2. if an error model is armed and this is the model's syscall returning
//      successfully, draws an independent Bernoulli decision from a seeded
//      generator and, on success, rewrites the return register to -errno
//      before the target sees it (this is the injection product).
//
// Returns that already carry an error are never touched; injection can only
// convert successes into failures, never make a natural failure worse or
// different.  The injected error is indistinguishable from a kernel-reported
// one from the target's point of view -- with the important caveat that the
// kernel *did* execute the call, so side effects (bytes read, connections
// accepted) have happened even though the caller is told otherwise.
//
// Threading contract: every ptrace request for a given session is issued on
// the single thread that called run().  Stops are reaped with per-tid
// waitpid so concurrent sessions in one process never steal each other's
// events (waitpid(-1) would).  New threads are discovered through
// PTRACE_EVENT_CLONE/FORK/VFORK before they run, so none escape tracing.

namespace syschaos::trace {

// Attach failed for permission (ptrace scope / capabilities) reasons.
// Callers map this to a privilege/setup failure rather than a crash.
class PrivilegeError : public std::runtime_error {
 public:
  explicit PrivilegeError(const std::string& what) : std::runtime_error(what) {}
};

struct CapabilityReport {
  bool arch_supported = false;
  bool attach_ok = false;
  bool syscall_info_ok = false;
  bool rewrite_ok = false;
  std::string detail;

  bool available() const {
    return arch_supported && attach_ok && syscall_info_ok && rewrite_ok;
  }
};

struct SessionOptions {
  // Wall-clock cap; absent means run until request_stop() or target exit.
  std::optional<std::chrono::milliseconds> duration;
  // Stop once this many eligible (successful) model-syscall exits were seen.
  std::optional<std::uint64_t> stop_after_intercepted;
  // Per-interception ndjson log (one record per model-syscall exit).
  std::optional<std::filesystem::path> interception_log;
  bool collect_stats = true;
};

struct SessionResult {
  SyscallStats stats;
  // Eligible events: successful exits of the model's syscall.
  std::uint64_t intercepted = 0;
  // Subset of eligible events whose return was rewritten.
  std::uint64_t injected = 0;
  bool target_exited = false;
  // Raw wait status; empty when the exit was observed but the status was
  // collected by another waiter first.
  std::optional<int> target_exit_status;
  double elapsed_seconds = 0.0;
};

namespace detail {

// The kernel header turns the request constants into plain int macros, so
// this shim restores the libc prototype's enum type in one place.
inline long xptrace(int req, pid_t tid, void* addr, void* data) {
  return ptrace(static_cast<__ptrace_request>(req), tid, addr, data);
}

inline std::vector<pid_t> list_tids(pid_t pid) {
  std::vector<pid_t> tids;
  const std::string dir = "/proc/" + std::to_string(pid) + "/task";
  DIR* d = opendir(dir.c_str());
  if (!d) return tids;
  while (dirent* e = readdir(d)) {
    if (e->d_name[0] == '.') continue;
    tids.push_back(static_cast<pid_t>(std::strtol(e->d_name, nullptr, 10)));
  }
  closedir(d);
  return tids;
}

// Uniform draw in [0,1) from the top 53 bits; explicitly spelled out so the
// decision stream is identical across standard libraries for a given seed.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

class SyscallTracer {
 public:
  SyscallTracer(pid_t pid, SessionOptions options)
      : pid_(pid), options_(std::move(options)) {
#if !defined(__x86_64__)
    throw std::runtime_error("syscall tracing is implemented for x86_64 only");
#endif
  }

  // Arms fault injection for `model` with a deterministic decision stream.
  void arm_injection(const ErrorModel& model, std::uint64_t seed) {
    model.validate(/*extra_syscalls=*/{model.syscall});
    const auto nr = syscall_number(model.syscall);
    if (!nr) throw std::invalid_argument("unknown syscall: " + model.syscall);
    model_nr_ = *nr;
    model_errno_ = model.error_value();
    model_rate_ = model.rate;
    rng_.seed(seed);
    armed_ = true;
  }

  void request_stop() { stop_requested_.store(true, std::memory_order_relaxed); }

  bool target_exited() const { return target_exited_.load(std::memory_order_relaxed); }
  std::uint64_t injected_live() const { return injected_.load(std::memory_order_relaxed); }
  std::uint64_t intercepted_live() const {
    return intercepted_.load(std::memory_order_relaxed);
  }

  // Attach, trace until a stop condition, detach.  Blocking; issue from one
  // thread only.  Throws PrivilegeError when attach is refused.
  SessionResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<std::chrono::steady_clock::time_point> deadline;
    if (options_.duration) deadline = t0 + *options_.duration;

    std::ofstream log_stream;
    if (options_.interception_log) {
      std::filesystem::create_directories(options_.interception_log->parent_path());
      log_stream.open(*options_.interception_log, std::ios::trunc);
      if (!log_stream) {
        throw std::runtime_error("cannot open interception log: " +
                                 options_.interception_log->string());
      }
    }

    attach_all();

    SessionResult result;
    int idle_spins = 0;
    while (!tids_.empty()) {
      if (stop_requested_.load(std::memory_order_relaxed)) break;
      if (deadline && std::chrono::steady_clock::now() >= *deadline) break;
      if (options_.stop_after_intercepted &&
          intercepted_.load(std::memory_order_relaxed) >=
              *options_.stop_after_intercepted) {
        break;
      }

      bool saw_event = false;
      // Snapshot: handlers mutate tids_ (clone adds, exits remove).
      const std::vector<pid_t> snapshot(tids_.begin(), tids_.end());
      for (pid_t tid : snapshot) {
        if (!tids_.count(tid)) continue;  // removed by an earlier handler
        int status = 0;
        const pid_t r = waitpid(tid, &status, __WALL | WNOHANG);
        if (r == 0) continue;
        if (r < 0) {
          if (errno == ECHILD || errno == ESRCH) forget_tid(tid, std::nullopt);
          continue;
        }
        saw_event = true;
        handle_status(tid, status, log_stream);
      }
      if (!saw_event) {
        // Spin briefly (cheap while a burst is in flight), then back off.
        if (++idle_spins < 64) {
          std::this_thread::yield();
        } else {
          std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
      } else {
        idle_spins = 0;
      }
    }

    // One final pass over stops that were already pending when the session
    // ended, so their exits still reach the stats.  Injection is disarmed
    // first: the decision to stop closes the injection window.
    armed_ = false;
    for (pid_t tid : std::vector<pid_t>(tids_.begin(), tids_.end())) {
      if (!tids_.count(tid)) continue;
      int status = 0;
      if (waitpid(tid, &status, __WALL | WNOHANG) == tid) {
        handle_status(tid, status, log_stream);
      }
    }

    detach_all();

    result.intercepted = intercepted_.load(std::memory_order_relaxed);
    result.injected = injected_.load(std::memory_order_relaxed);
    result.target_exited = target_exited_.load(std::memory_order_relaxed);
    result.target_exit_status = target_exit_status_;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options_.collect_stats) {
      result.stats.window_seconds = result.elapsed_seconds;
      result.stats.truncated = result.target_exited;
      for (const auto& [nr, counts] : stats_by_nr_) {
        auto& per = result.stats.by_syscall[syscall_name(nr)];
        per.invocations = counts.invocations;
        for (const auto& [err, n] : counts.errors) {
          per.errors[errno_name(err)] = n;
        }
      }
    }
    return result;
  }

 private:
  struct Counts {
    std::uint64_t invocations = 0;
    std::unordered_map<int, std::uint64_t> errors;
  };

  static constexpr int kSeizeOptions = PTRACE_O_TRACESYSGOOD | PTRACE_O_TRACECLONE |
                                       PTRACE_O_TRACEFORK | PTRACE_O_TRACEVFORK;

  void attach_all() {
    // Seize every existing thread, rescanning until a full pass finds
    // nothing new; once all threads carry TRACECLONE, later spawns are
    // reported as events instead.
    bool progress = true;
    while (progress) {
      progress = false;
      const auto listed = detail::list_tids(pid_);
      if (listed.empty()) {
        throw std::runtime_error("no such process: " + std::to_string(pid_));
      }
      for (pid_t tid : listed) {
        if (tids_.count(tid)) continue;
        if (detail::xptrace(PTRACE_SEIZE, tid, nullptr,
                            reinterpret_cast<void*>(kSeizeOptions)) == -1) {
          if (errno == EPERM) {
            detach_all();
            throw PrivilegeError(
                "ptrace attach refused (check privileges and the kernel's "
                "ptrace scope setting)");
          }
          continue;  // ESRCH: thread raced away
        }
        tids_.insert(tid);
        // Force the thread out of any blocking call so it starts producing
        // syscall-stops immediately.
        detail::xptrace(PTRACE_INTERRUPT, tid, nullptr, nullptr);
        progress = true;
      }
    }
    if (!tids_.count(pid_)) {
      throw std::runtime_error("main thread of " + std::to_string(pid_) +
                               " could not be traced");
    }
  }

  void forget_tid(pid_t tid, std::optional<int> exit_status) {
    tids_.erase(tid);
    if (tid == pid_) {
      target_exited_.store(true, std::memory_order_relaxed);
      if (exit_status) target_exit_status_ = *exit_status;
    }
  }

  void handle_status(pid_t tid, int status, std::ofstream& log_stream) {
    if (WIFEXITED(status) || WIFSIGNALED(status)) {
      forget_tid(tid, status);
      return;
    }
    if (!WIFSTOPPED(status)) return;

    const int sig = WSTOPSIG(status);
    const unsigned event = static_cast<unsigned>(status) >> 16;

    if (sig == (SIGTRAP | 0x80)) {
      handle_syscall_stop(tid, log_stream);
      resume(tid, 0);
      return;
    }
    if (event == PTRACE_EVENT_CLONE || event == PTRACE_EVENT_FORK ||
        event == PTRACE_EVENT_VFORK) {
      unsigned long new_tid = 0;
      if (detail::xptrace(PTRACE_GETEVENTMSG, tid, nullptr, &new_tid) == 0 &&
          new_tid != 0) {
        // The child is born stopped and inherits our options; it joins the
        // poll set and is resumed when its first stop is reaped.
        tids_.insert(static_cast<pid_t>(new_tid));
      }
      resume(tid, 0);
      return;
    }
    if (event != 0) {
      // PTRACE_EVENT_STOP (interrupt / group-stop / new thread) and exec.
      resume(tid, 0);
      return;
    }
    // Plain signal-delivery stop: hand the signal back unchanged.
    resume(tid, sig);
  }

  void handle_syscall_stop(pid_t tid, std::ofstream& log_stream) {
    ptrace_syscall_info info{};
    if (detail::xptrace(PTRACE_GET_SYSCALL_INFO, tid,
                        reinterpret_cast<void*>(sizeof(info)), &info) <= 0) {
      return;
    }
    if (info.op != PTRACE_SYSCALL_INFO_EXIT) return;  // entries need no action

    user_regs_struct regs{};
    if (detail::xptrace(PTRACE_GETREGS, tid, nullptr, &regs) == -1) return;
    const long nr = static_cast<long>(regs.orig_rax);
    const long rval = static_cast<long>(regs.rax);
    const bool natural_error = return_is_error(rval);

    if (options_.collect_stats) {
      auto& c = stats_by_nr_[nr];
      ++c.invocations;
      if (natural_error) ++c.errors[static_cast<int>(-rval)];
    }

    if (!armed_ || nr != model_nr_) return;

    bool injected_now = false;
    if (!natural_error) {
      // Eligible: a successful return of the model's syscall.  Natural
      // failures above are deliberately left alone.
      intercepted_.fetch_add(1, std::memory_order_relaxed);
      if (detail::uniform01(rng_) < model_rate_) {
        regs.rax = static_cast<unsigned long long>(-model_errno_);
        if (detail::xptrace(PTRACE_SETREGS, tid, nullptr, &regs) == 0) {
          injected_.fetch_add(1, std::memory_order_relaxed);
          injected_now = true;
        }
      }
    }
    if (log_stream.is_open()) {
      nlohmann::json rec{{"ts", iso8601(std::chrono::system_clock::now())},
                         {"tid", tid},
                         {"syscall", syscall_name(nr)},
                         {"rval", rval},
                         {"action", injected_now ? "inject" : "pass"}};
      if (injected_now) rec["error"] = errno_name(model_errno_);
      log_stream << rec.dump() << '\n';
    }
  }

  void resume(pid_t tid, int sig) {
    if (detail::xptrace(PTRACE_SYSCALL, tid, nullptr,
                        reinterpret_cast<void*>(static_cast<long>(sig))) == -1 &&
        errno == ESRCH) {
      forget_tid(tid, std::nullopt);
    }
  }

  void detach_all() {
    for (pid_t tid : std::vector<pid_t>(tids_.begin(), tids_.end())) {
      detail::xptrace(PTRACE_INTERRUPT, tid, nullptr, nullptr);
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (!tids_.empty() && std::chrono::steady_clock::now() < deadline) {
      bool saw_event = false;
      for (pid_t tid : std::vector<pid_t>(tids_.begin(), tids_.end())) {
        int status = 0;
        const pid_t r = waitpid(tid, &status, __WALL | WNOHANG);
        if (r == 0) continue;
        saw_event = true;
        if (r < 0) {
          forget_tid(tid, std::nullopt);
          continue;
        }
        if (WIFEXITED(status) || WIFSIGNALED(status)) {
          forget_tid(tid, status);
          continue;
        }
        if (WIFSTOPPED(status)) {
          // Any stop is a valid detach point.
          detail::xptrace(PTRACE_DETACH, tid, nullptr, nullptr);
          tids_.erase(tid);
        }
      }
      if (!saw_event) std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    // Last resort for stragglers; ESRCH here just means they are gone.
    for (pid_t tid : std::vector<pid_t>(tids_.begin(), tids_.end())) {
      detail::xptrace(PTRACE_DETACH, tid, nullptr, nullptr);
      tids_.erase(tid);
    }
  }

  pid_t pid_;
  SessionOptions options_;
  std::set<pid_t> tids_;
  std::unordered_map<long, Counts> stats_by_nr_;

  bool armed_ = false;
  long model_nr_ = -1;
  int model_errno_ = 0;
  double model_rate_ = 0.0;
  std::mt19937_64 rng_;

  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> target_exited_{false};
  std::atomic<std::uint64_t> intercepted_{0};
  std::atomic<std::uint64_t> injected_{0};
  std::optional<int> target_exit_status_;
};

// ---------------------------------------------------------------------------
// Capability probe: end-to-end self test against a scratch child.

inline CapabilityReport probe_capabilities() {
  CapabilityReport report;
#if !defined(__x86_64__)
  report.detail = "unsupported architecture (x86_64 required)";
  return report;
#else
  report.arch_supported = true;

  const int zero_fd = ::open("/dev/zero", O_RDONLY | O_CLOEXEC);
  if (zero_fd < 0) {
    report.detail = "cannot open /dev/zero";
    return report;
  }
  const pid_t child = ::fork();
  if (child < 0) {
    ::close(zero_fd);
    report.detail = "fork failed";
    return report;
  }
  if (child == 0) {
    // Scratch tracee: read /dev/zero until one read reports EAGAIN (which
    // can only come from a rewrite) or the attempt budget runs out.
    char buf[16];
    for (long i = 0; i < 50'000'000L; ++i) {
      const long n = ::syscall(SYS_read, zero_fd, buf, sizeof(buf));
      if (n < 0 && errno == EAGAIN) ::_exit(42);
    }
    ::_exit(1);
  }
  ::close(zero_fd);

  bool saw_syscall_stop = false;
  bool did_rewrite = false;
  std::string fail;
  if (detail::xptrace(PTRACE_SEIZE, child, nullptr,
             reinterpret_cast<void*>(PTRACE_O_TRACESYSGOOD)) == -1) {
    fail = std::string("PTRACE_SEIZE failed: ") + std::strerror(errno);
  } else {
    report.attach_ok = true;
    detail::xptrace(PTRACE_INTERRUPT, child, nullptr, nullptr);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(3);
    while (std::chrono::steady_clock::now() < deadline && !did_rewrite) {
      int status = 0;
      const pid_t r = ::waitpid(child, &status, __WALL | WNOHANG);
      if (r == 0) {
        std::this_thread::sleep_for(std::chrono::microseconds(100));
        continue;
      }
      if (r < 0 || WIFEXITED(status) || WIFSIGNALED(status)) break;
      if (!WIFSTOPPED(status)) continue;
      if (WSTOPSIG(status) == (SIGTRAP | 0x80)) {
        ptrace_syscall_info info{};
        if (detail::xptrace(PTRACE_GET_SYSCALL_INFO, child,
                   reinterpret_cast<void*>(sizeof(info)), &info) > 0) {
          saw_syscall_stop = true;
          if (info.op == PTRACE_SYSCALL_INFO_EXIT) {
            user_regs_struct regs{};
            if (detail::xptrace(PTRACE_GETREGS, child, nullptr, &regs) == 0 &&
                static_cast<long>(regs.orig_rax) == SYS_read &&
                !return_is_error(static_cast<long>(regs.rax))) {
              regs.rax = static_cast<unsigned long long>(-EAGAIN);
              if (detail::xptrace(PTRACE_SETREGS, child, nullptr, &regs) == 0) {
                did_rewrite = true;
              }
            }
          }
        } else {
          fail = "PTRACE_GET_SYSCALL_INFO unavailable";
          break;
        }
      }
      detail::xptrace(PTRACE_SYSCALL, child, nullptr, nullptr);
    }
    report.syscall_info_ok = saw_syscall_stop;
  }

  // Detach and let the child run to its verdict.  A seized tracee only
  // detaches from a stop, and the child may be running, halted at its next
  // trace stop, or already gone — interrupt, reap one stop, detach there.
  int status = 0;
  bool reaped = false;
  bool detached = false;
  detail::xptrace(PTRACE_INTERRUPT, child, nullptr, nullptr);
  const auto detach_deadline =
      std::chrono::steady_clock::now() + std::chrono::seconds(2);
  while (!detached && !reaped &&
         std::chrono::steady_clock::now() < detach_deadline) {
    const pid_t r = ::waitpid(child, &status, __WALL | WNOHANG);
    if (r < 0) break;
    if (r == 0) {
      std::this_thread::sleep_for(std::chrono::microseconds(100));
      continue;
    }
    if (WIFEXITED(status) || WIFSIGNALED(status)) {
      reaped = true;
    } else if (WIFSTOPPED(status)) {
      detached = detail::xptrace(PTRACE_DETACH, child, nullptr, nullptr) == 0;
    }
  }
  if (!detached && !reaped) {
    detail::xptrace(PTRACE_DETACH, child, nullptr, nullptr);
  }
  const auto reap_deadline = std::chrono::steady_clock::now() + std::chrono::seconds(3);
  while (!reaped && std::chrono::steady_clock::now() < reap_deadline) {
    if (::waitpid(child, &status, WNOHANG) == child) {
      reaped = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  if (!reaped) {
    ::kill(child, SIGKILL);
    ::waitpid(child, &status, 0);
  }
  report.rewrite_ok =
      did_rewrite && WIFEXITED(status) && WEXITSTATUS(status) == 42;

  if (!report.available() && report.detail.empty()) {
    report.detail = !fail.empty() ? fail
                    : !report.rewrite_ok
                        ? "return rewrite was not observed by the scratch child"
                        : "incomplete probe";
  } else if (report.available()) {
    report.detail = "attach, syscall-stop decoding and return rewrite verified";
  }
  return report;
#endif
}

// ---------------------------------------------------------------------------
// Convenience wrappers

// Observe a process for a fixed window; no interference beyond tracing.
inline SyscallStats monitor_syscalls(pid_t pid, std::chrono::milliseconds window,
                                     const std::string& target_id = "") {
  SessionOptions opts;
  opts.duration = window;
  SyscallTracer tracer(pid, std::move(opts));
  auto result = tracer.run();
  result.stats.target_id = target_id;
  return result.stats;
}

// Fault injection running on a background thread, so the caller can scrape
// metrics and watch liveness while the session is live.  All ptrace calls
// stay on the session thread.
class InjectionSession {
 public:
  InjectionSession(pid_t pid, const ErrorModel& model, std::uint64_t seed,
                   SessionOptions options = {})
      : tracer_(pid, std::move(options)) {
    tracer_.arm_injection(model, seed);
    worker_ = std::thread([this] {
      try {
        result_ = tracer_.run();
      } catch (...) {
        error_ = std::current_exception();
      }
      finished_.store(true, std::memory_order_release);
    });
  }

  ~InjectionSession() {
    try {
      stop();
    } catch (...) {
    }
  }

  InjectionSession(const InjectionSession&) = delete;
  InjectionSession& operator=(const InjectionSession&) = delete;

  // Ends the session and waits for detach; rethrows a session failure.
  // Idempotent.
  void stop() {
    tracer_.request_stop();
    if (worker_.joinable()) worker_.join();
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

  bool finished() const { return finished_.load(std::memory_order_acquire); }
  bool target_exited() const { return tracer_.target_exited(); }
  std::uint64_t injected() const { return tracer_.injected_live(); }
  std::uint64_t intercepted() const { return tracer_.intercepted_live(); }

  // Valid after stop().
  const SessionResult& result() const { return result_; }

 private:
  SyscallTracer tracer_;
  std::thread worker_;
  SessionResult result_;
  std::exception_ptr error_;
  std::atomic<bool> finished_{false};
};

}  // namespace syschaos::trace
