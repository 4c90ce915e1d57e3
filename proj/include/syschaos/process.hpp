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

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

// Child-process lifecycle management.
//
// The subtle part is coexisting with an in-process tracer: while a
// SyscallTracer is attached to the child, any wait-family call from another
// thread starves the stop notifications the tracer needs.  Liveness polling
// therefore reads /proc, and waitpid only runs once the process is already
// dead; losing the reaping race to the tracer (ECHILD) is tolerated.

namespace syschaos {

namespace detail {

// State letter and parent pid from /proc/<pid>/stat; empty when the pid is
// gone.  The comm field may contain spaces and parentheses, so parsing
// resumes after the *last* closing parenthesis.
struct ProcInfo {
  char state;
  pid_t ppid;
};

inline std::optional<ProcInfo> proc_info(pid_t pid) {
  char path[64];
  std::snprintf(path, sizeof(path), "/proc/%d/stat", pid);
  const int fd = ::open(path, O_RDONLY | O_CLOEXEC);
  if (fd < 0) return std::nullopt;
  char buf[512];
  const ssize_t n = ::read(fd, buf, sizeof(buf) - 1);
  ::close(fd);
  if (n <= 0) return std::nullopt;
  buf[n] = '\0';
  const char* close_paren = std::strrchr(buf, ')');
  if (!close_paren || close_paren[1] != ' ') return std::nullopt;
  ProcInfo info{close_paren[2], 0};
  info.ppid = static_cast<pid_t>(std::atoi(close_paren + 4));
  return info;
}

}  // namespace detail

// Liveness of an arbitrary process, not necessarily our child: it has a
// /proc entry and is neither a zombie nor already gone.  Never calls into
// the wait family, so it is safe next to an attached tracer.
inline bool process_alive(pid_t pid) {
  if (pid <= 0) return false;
  const auto info = detail::proc_info(pid);
  return info && info->state != 'Z' && info->state != 'X';
}

// Decoded exit state.  `unknown` covers the case where another component
// (typically a tracer loop) collected the wait status first and did not
// report it back via note_reaped().
struct ExitInfo {
  enum class Kind { clean, signaled, unknown };
  Kind kind = Kind::unknown;
  int value = 0;  // exit code for clean, signal number for signaled

  bool clean_zero() const { return kind == Kind::clean && value == 0; }
};

struct LaunchOptions {
  // Redirect the child's stdout / stderr to files (truncated on launch).
  std::optional<std::filesystem::path> stdout_path;
  std::optional<std::filesystem::path> stderr_path;
  // Extra environment variables set in the child before exec.
  std::vector<std::pair<std::string, std::string>> env;
  // Run the child in its own process group and signal the group on
  // terminate, so grandchildren cannot outlive it (an orphan holding an
  // inherited stdout pipe keeps the parent's readers blocked).
  bool own_process_group = true;
};

class ChildProcess {
 public:
  // Launches argv[0] (PATH-searched) with the given arguments.  Throws
  // std::runtime_error when the exec itself fails, detected through a
  // close-on-exec pipe, so a bad binary name fails loudly at launch.
  explicit ChildProcess(std::vector<std::string> argv, LaunchOptions opts = {})
      : argv_(std::move(argv)) {
    if (argv_.empty()) throw std::invalid_argument("empty argv");

    int exec_pipe[2];
    if (::pipe2(exec_pipe, O_CLOEXEC) != 0) {
      throw std::runtime_error("pipe2 failed");
    }

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(exec_pipe[0]);
      ::close(exec_pipe[1]);
      throw std::runtime_error("fork failed");
    }
    if (pid_ == 0) {
      ::close(exec_pipe[0]);
      if (opts.own_process_group) ::setpgid(0, 0);
      for (const auto& [key, value] : opts.env) {
        ::setenv(key.c_str(), value.c_str(), 1);
      }
      if (!redirect(STDOUT_FILENO, opts.stdout_path) ||
          !redirect(STDERR_FILENO, opts.stderr_path)) {
        report_exec_error(exec_pipe[1], errno);
      }
      std::vector<char*> cargv;
      cargv.reserve(argv_.size() + 1);
      for (auto& a : argv_) cargv.push_back(a.data());
      cargv.push_back(nullptr);
      ::execvp(cargv[0], cargv.data());
      report_exec_error(exec_pipe[1], errno);
    }

    group_signals_ = opts.own_process_group;
    // Mirror the setpgid from the parent side too, so a terminate issued
    // before the child reaches exec still targets the right group.
    if (group_signals_) ::setpgid(pid_, pid_);

    ::close(exec_pipe[1]);
    int child_errno = 0;
    const ssize_t n = ::read(exec_pipe[0], &child_errno, sizeof(child_errno));
    ::close(exec_pipe[0]);
    if (n > 0) {
      // Exec failed; the child has already exited.  Reap it.
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
      throw std::runtime_error("exec failed for '" + argv_[0] +
                               "': " + std::strerror(child_errno));
    }
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ChildProcess(ChildProcess&& other) noexcept
      : argv_(std::move(other.argv_)),
        pid_(other.pid_),
        exit_(other.exit_),
        reaped_(other.reaped_),
        group_signals_(other.group_signals_) {
    other.pid_ = -1;
    other.reaped_ = true;
  }

  ~ChildProcess() {
    if (pid_ > 0 && !reaped_) terminate(std::chrono::milliseconds(500));
  }

  pid_t pid() const { return pid_; }

  // True while the child has not exited.  Polls without consuming ptrace
  // stop events, so it is safe while a tracer is attached.
  bool running() {
    poll();
    return !exit_.has_value();
  }

  std::optional<ExitInfo> exit_info() {
    poll();
    return exit_;
  }

  // Record an exit status that some other component collected via wait().
  // Pass the raw wait status when known; omit it when only the fact of the
  // exit was observed.
  void note_reaped(std::optional<int> raw_wait_status = std::nullopt) {
    reaped_ = true;
    if (exit_ && exit_->kind != ExitInfo::Kind::unknown) return;
    ExitInfo info;
    if (raw_wait_status) {
      if (WIFEXITED(*raw_wait_status)) {
        info.kind = ExitInfo::Kind::clean;
        info.value = WEXITSTATUS(*raw_wait_status);
      } else if (WIFSIGNALED(*raw_wait_status)) {
        info.kind = ExitInfo::Kind::signaled;
        info.value = WTERMSIG(*raw_wait_status);
      }
    }
    exit_ = info;
  }

  // Graceful stop: SIGTERM, wait for `grace`, escalate to SIGKILL.  Returns
  // the final exit info (unknown when another component reaped first).
  ExitInfo terminate(std::chrono::milliseconds grace =
                         std::chrono::milliseconds(2000)) {
    poll();
    if (!exit_) {
      send_signal(SIGTERM);
      const auto deadline = std::chrono::steady_clock::now() + grace;
      while (!exit_ && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        poll();
      }
      if (!exit_) {
        send_signal(SIGKILL);
        while (!exit_) {
          std::this_thread::sleep_for(std::chrono::milliseconds(2));
          poll();
        }
      }
    } else if (group_signals_) {
      // The direct child is gone; sweep any group stragglers regardless.
      ::kill(-pid_, SIGKILL);
    }
    return *exit_;
  }

 private:
  void send_signal(int sig) {
    if (!group_signals_ || ::kill(-pid_, sig) != 0) ::kill(pid_, sig);
  }

  static bool redirect(int fd, const std::optional<std::filesystem::path>& to) {
    if (!to) return true;
    const int f = ::open(to->c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (f < 0) return false;
    const bool ok = ::dup2(f, fd) == fd;
    ::close(f);
    return ok;
  }

  [[noreturn]] static void report_exec_error(int pipe_wr, int err) {
    const ssize_t ignored [[maybe_unused]] = ::write(pipe_wr, &err, sizeof(err));
    ::_exit(127);
  }

  // Refresh exit_.  Liveness is read from /proc rather than a wait call:
  // waiting on a live tracee from a non-tracer thread starves the tracer's
  // event delivery.  waitpid only runs once the child is already dead, and
  // losing the reaping race to the tracer (ECHILD) is tolerated.
  void poll() {
    if (pid_ <= 0) return;
    if (exit_ && (reaped_ || exit_->kind != ExitInfo::Kind::unknown)) return;
    const auto info_now = detail::proc_info(pid_);
    // A recycled pid shows up alive with a different parent; only a live
    // entry that is still our child means "running".
    if (info_now && info_now->state != 'Z' && info_now->state != 'X' &&
        info_now->ppid == ::getpid()) {
      return;  // still running
    }
    ExitInfo info;
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      reaped_ = true;
      if (WIFEXITED(status)) {
        info.kind = ExitInfo::Kind::clean;
        info.value = WEXITSTATUS(status);
      } else if (WIFSIGNALED(status)) {
        info.kind = ExitInfo::Kind::signaled;
        info.value = WTERMSIG(status);
      }
    } else if (r < 0) {
      reaped_ = true;  // collected elsewhere; note_reaped() may fill it in
    }
    // r == 0: dead but not claimable yet (an attached tracer holds the
    // notification); keep kind unknown and retry on the next poll.
    if (!exit_ || exit_->kind == ExitInfo::Kind::unknown) exit_ = info;
  }

  std::vector<std::string> argv_;
  pid_t pid_ = -1;
  std::optional<ExitInfo> exit_;
  bool reaped_ = false;
  bool group_signals_ = false;
};

}  // namespace syschaos
