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

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "syschaos/logging.hpp"
#include "syschaos/syscalls.hpp"

// A scriptable stand-in for a long-running networked service.  It exists so
// experiments have something real to attach to: it performs genuine
// syscalls (reads, writes, datagram receives, accepts) at a steady pace,
// exposes metrics over HTTP in the text exposition format, and reacts to
// syscall failures the way the script says -- ignore them, retry with
// backoff, latch into a degraded mode, or crash outright.
//
// Reactions apply only to workload syscalls.  The metrics server handles
// its own errors (a failed response is just a dropped connection), so an
// injected fault can degrade observability without instantly killing the
// process that reports it.

namespace syschaos::sim {

// ---------------------------------------------------------------------------
// Behavior script

struct RetrySpec {
  int attempts = 3;      // re-attempts after the initial failure
  int backoff_ms = 10;   // pause between attempts
};

struct Reaction {
  enum class Kind { ignore, crash, retry, degrade };
  Kind kind = Kind::ignore;
  RetrySpec retry;
};

inline std::string to_string(Reaction::Kind k) {
  switch (k) {
    case Reaction::Kind::ignore: return "ignore";
    case Reaction::Kind::crash: return "crash";
    case Reaction::Kind::retry: return "retry";
    case Reaction::Kind::degrade: return "degrade";
  }
  return "ignore";
}

inline Reaction::Kind reaction_kind_from_string(const std::string& s) {
  if (s == "ignore") return Reaction::Kind::ignore;
  if (s == "crash") return Reaction::Kind::crash;
  if (s == "retry") return Reaction::Kind::retry;
  if (s == "degrade") return Reaction::Kind::degrade;
  throw std::invalid_argument("unknown reaction kind: " + s);
}

struct WorkloadSpec {
  // file_read | file_write | udp_recv | nb_recv | tcp_accept
  std::string kind;
  double ops_per_second = 50.0;
  // When false the workload still runs but none of its counters appear in
  // the exposition -- a fault in it is invisible to scrapes.
  bool expose_metrics = true;
  // Burst mode: wait burst_delay_ms, run burst_ops back-to-back ops with no
  // pacing, then idle.  0 means paced continuous operation.
  int burst_ops = 0;
  int burst_delay_ms = 0;
  // Keyed "syscall:ERRNO", e.g. "read:EAGAIN".  Unmatched failures are
  // counted but trigger no reaction.
  std::map<std::string, Reaction> reactions;
};

struct GaugeSpec {
  std::string name;
  double base = 100.0;
  double amplitude = 2.0;      // slow sine around the base
  double noise = 0.5;          // gaussian jitter
  double degraded_value = 40.0;
  bool affected_by_degrade = false;
};

struct BehaviorScript {
  std::string target_id = "toy";
  int metrics_port = 0;
  std::uint64_t seed = 1;
  std::vector<WorkloadSpec> workloads;
  std::vector<GaugeSpec> gauges;
};

inline void to_json(nlohmann::json& j, const Reaction& r) {
  j = {{"kind", to_string(r.kind)}};
  if (r.kind == Reaction::Kind::retry) {
    j["attempts"] = r.retry.attempts;
    j["backoff_ms"] = r.retry.backoff_ms;
  }
}

inline void from_json(const nlohmann::json& j, Reaction& r) {
  r.kind = reaction_kind_from_string(j.at("kind").get<std::string>());
  if (r.kind == Reaction::Kind::retry) {
    r.retry.attempts = j.value("attempts", 3);
    r.retry.backoff_ms = j.value("backoff_ms", 10);
  }
}

inline void to_json(nlohmann::json& j, const WorkloadSpec& w) {
  j = {{"kind", w.kind},
       {"ops_per_second", w.ops_per_second},
       {"expose_metrics", w.expose_metrics},
       {"burst_ops", w.burst_ops},
       {"burst_delay_ms", w.burst_delay_ms},
       {"reactions", w.reactions}};
}

inline void from_json(const nlohmann::json& j, WorkloadSpec& w) {
  j.at("kind").get_to(w.kind);
  w.ops_per_second = j.value("ops_per_second", 50.0);
  w.expose_metrics = j.value("expose_metrics", true);
  w.burst_ops = j.value("burst_ops", 0);
  w.burst_delay_ms = j.value("burst_delay_ms", 0);
  if (j.contains("reactions")) j.at("reactions").get_to(w.reactions);
}

inline void to_json(nlohmann::json& j, const GaugeSpec& g) {
  j = {{"name", g.name},
       {"base", g.base},
       {"amplitude", g.amplitude},
       {"noise", g.noise},
       {"degraded_value", g.degraded_value},
       {"affected_by_degrade", g.affected_by_degrade}};
}

inline void from_json(const nlohmann::json& j, GaugeSpec& g) {
  j.at("name").get_to(g.name);
  g.base = j.value("base", 100.0);
  g.amplitude = j.value("amplitude", 2.0);
  g.noise = j.value("noise", 0.5);
  g.degraded_value = j.value("degraded_value", 40.0);
  g.affected_by_degrade = j.value("affected_by_degrade", false);
}

inline void to_json(nlohmann::json& j, const BehaviorScript& s) {
  j = {{"target_id", s.target_id},
       {"metrics_port", s.metrics_port},
       {"seed", s.seed},
       {"workloads", s.workloads},
       {"gauges", s.gauges}};
}

inline void from_json(const nlohmann::json& j, BehaviorScript& s) {
  j.at("target_id").get_to(s.target_id);
  j.at("metrics_port").get_to(s.metrics_port);
  s.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("workloads")) j.at("workloads").get_to(s.workloads);
  if (j.contains("gauges")) j.at("gauges").get_to(s.gauges);
}

inline BehaviorScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script: " + path.string());
  nlohmann::json j;
  in >> j;
  return j.get<BehaviorScript>();
}

inline void save_script(const BehaviorScript& script,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write script: " + path.string());
  out << nlohmann::json(script).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Counters shared between workloads and the metrics renderer

class Counters {
 public:
  void count_op(const std::string& workload, bool ok) {
    std::lock_guard<std::mutex> lock(mu_);
    ++ops_[workload];
    if (!ok) ++op_failures_[workload];
  }

  void count_syscall(const std::string& syscall, int err) {
    std::lock_guard<std::mutex> lock(mu_);
    ++syscalls_[syscall];
    if (err != 0) ++syscall_errors_[{syscall, trace::errno_name(err)}];
  }

  struct Snapshot {
    std::map<std::string, std::uint64_t> ops;
    std::map<std::string, std::uint64_t> op_failures;
    std::map<std::string, std::uint64_t> syscalls;
    std::map<std::pair<std::string, std::string>, std::uint64_t> syscall_errors;
  };

  Snapshot snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return {ops_, op_failures_, syscalls_, syscall_errors_};
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> ops_;
  std::map<std::string, std::uint64_t> op_failures_;
  std::map<std::string, std::uint64_t> syscalls_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> syscall_errors_;
};

// ---------------------------------------------------------------------------
// Metrics rendering

class MetricsRegistry {
 public:
  MetricsRegistry(const BehaviorScript& script, const Counters& counters)
      : script_(script),
        counters_(counters),
        started_(std::chrono::steady_clock::now()),
        noise_rng_(script.seed ^ 0x9e3779b97f4a7c15ULL) {}

  void latch_degraded() { degraded_.store(true, std::memory_order_relaxed); }
  bool degraded() const { return degraded_.load(std::memory_order_relaxed); }

  // Text exposition, one fresh page per scrape.
  std::string render() {
    std::ostringstream out;
    out.precision(10);
    const double uptime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_)
            .count();
    out << "# TYPE toy_uptime_seconds gauge\n";
    out << "toy_uptime_seconds " << uptime << "\n";

    {
      std::lock_guard<std::mutex> lock(rng_mu_);
      std::normal_distribution<double> unit(0.0, 1.0);
      for (const auto& g : script_.gauges) {
        const bool low = g.affected_by_degrade && degraded();
        const double center =
            low ? g.degraded_value
                : g.base + g.amplitude * std::sin(uptime * 2.0 * M_PI / 60.0);
        out << "# TYPE " << g.name << " gauge\n";
        out << g.name << " " << center + g.noise * unit(noise_rng_) << "\n";
      }
    }

    // One exposed flag per workload kind decides whether its op counters
    // and its syscalls' counters appear.
    std::map<std::string, bool> expose;
    for (const auto& w : script_.workloads) expose[w.kind] = w.expose_metrics;
    const std::map<std::string, std::string> workload_syscall = {
        {"file_read", "read"},   {"file_write", "write"},
        {"udp_recv", "recvfrom"}, {"nb_recv", "recvfrom"},
        {"tcp_accept", "accept4"}};
    std::map<std::string, bool> syscall_exposed;
    for (const auto& [wl, sc] : workload_syscall) {
      if (expose.count(wl) && expose.at(wl)) syscall_exposed[sc] = true;
    }

    const auto snap = counters_.snapshot();
    const auto count_of = [](const std::map<std::string, std::uint64_t>& m,
                             const std::string& k) -> std::uint64_t {
      const auto it = m.find(k);
      return it == m.end() ? 0 : it->second;
    };
    // Configured series are present from the first scrape (at zero), so a
    // counter never pops into existence partway through an epoch.
    bool typed_ops = false;
    for (const auto& [wl, on] : expose) {
      if (!on) continue;
      if (!typed_ops) {
        out << "# TYPE toy_ops_total counter\n";
        out << "# TYPE toy_op_failures_total counter\n";
        typed_ops = true;
      }
      out << "toy_ops_total{workload=\"" << wl << "\"} "
          << count_of(snap.ops, wl) << "\n";
      out << "toy_op_failures_total{workload=\"" << wl << "\"} "
          << count_of(snap.op_failures, wl) << "\n";
    }
    bool typed_sys = false;
    for (const auto& [sc, on] : syscall_exposed) {
      if (!on) continue;
      if (!typed_sys) {
        out << "# TYPE toy_syscall_total counter\n";
        typed_sys = true;
      }
      out << "toy_syscall_total{syscall=\"" << sc << "\"} "
          << count_of(snap.syscalls, sc) << "\n";
    }
    bool typed_errs = false;
    for (const auto& [key, n] : snap.syscall_errors) {
      if (!syscall_exposed.count(key.first)) continue;
      if (!typed_errs) {
        out << "# TYPE toy_syscall_errors_total counter\n";
        typed_errs = true;
      }
      out << "toy_syscall_errors_total{syscall=\"" << key.first
          << "\",errno=\"" << key.second << "\"} " << n << "\n";
    }
    return out.str();
  }

 private:
  const BehaviorScript& script_;
  const Counters& counters_;
  std::chrono::steady_clock::time_point started_;
  std::atomic<bool> degraded_{false};
  std::mutex rng_mu_;
  std::mt19937_64 noise_rng_;
};

// ---------------------------------------------------------------------------
// Metrics HTTP server (deliberately hand-rolled on plain sockets: its
// accept4/read/write calls are themselves instrumentable targets, which a
// library server with its own poll loop would hide)

class PortBusyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MetricsServer {
 public:
  MetricsServer(int port, MetricsRegistry& registry, log::EventLog& events)
      : registry_(registry), events_(events) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
        0) {
      ::close(listen_fd_);
      throw PortBusyError("cannot bind metrics port " + std::to_string(port));
    }
    if (::listen(listen_fd_, 16) != 0) {
      ::close(listen_fd_);
      throw std::runtime_error("listen() failed");
    }
    // Accept wakes up regularly so stop() is honored promptly.
    timeval tv{0, 200 * 1000};
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    thread_ = std::thread([this] { serve(); });
  }

  ~MetricsServer() { stop(); }

  void stop() {
    const bool was_running = !stopping_.exchange(true);
    if (was_running && thread_.joinable()) thread_.join();
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
  }

 private:
  void serve() {
    while (!stopping_.load(std::memory_order_relaxed)) {
      const int conn = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (conn < 0) continue;  // timeout, injected error, or shutdown
      handle(conn);
      ::close(conn);
    }
  }

  void handle(int conn) {
    timeval tv{1, 0};
    ::setsockopt(conn, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    ::setsockopt(conn, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    // Signal-free write errors: a dead peer must not raise SIGPIPE.
    std::string request;
    char buf[2048];
    while (request.find("\r\n\r\n") == std::string::npos &&
           request.size() < 16 * 1024) {
      const ssize_t n = ::read(conn, buf, sizeof(buf));
      if (n <= 0) return;  // timeout, reset, or injected failure: drop it
      request.append(buf, static_cast<std::size_t>(n));
    }
    const bool metrics = request.rfind("GET /metrics", 0) == 0;
    const std::string body = metrics ? registry_.render() : "not found\n";
    std::ostringstream resp;
    resp << "HTTP/1.1 " << (metrics ? "200 OK" : "404 Not Found") << "\r\n"
         << "Content-Type: text/plain; version=0.0.4\r\n"
         << "Content-Length: " << body.size() << "\r\n"
         << "Connection: close\r\n\r\n"
         << body;
    const std::string wire = resp.str();
    std::size_t off = 0;
    while (off < wire.size()) {
      const ssize_t n =
          ::send(conn, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return;  // dropped mid-response; the scraper will retry
      off += static_cast<std::size_t>(n);
    }
  }

  MetricsRegistry& registry_;
  log::EventLog& events_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

// ---------------------------------------------------------------------------
// Workloads

namespace detail {

// One workload kind's syscall resources plus the call itself.
class OpRunner {
 public:
  virtual ~OpRunner() = default;
  virtual const char* syscall_name() const = 0;
  // One raw attempt; returns 0 on success or the errno on failure.
  virtual int attempt() = 0;
};

class FileReadOp final : public OpRunner {
 public:
  FileReadOp() {
    fd_ = ::open("/dev/zero", O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) throw std::runtime_error("open /dev/zero failed");
  }
  ~FileReadOp() override { ::close(fd_); }
  const char* syscall_name() const override { return "read"; }
  int attempt() override {
    char buf[4096];
    return ::read(fd_, buf, sizeof(buf)) < 0 ? errno : 0;
  }

 private:
  int fd_;
};

class FileWriteOp final : public OpRunner {
 public:
  FileWriteOp() {
    fd_ = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
    if (fd_ < 0) throw std::runtime_error("open /dev/null failed");
  }
  ~FileWriteOp() override { ::close(fd_); }
  const char* syscall_name() const override { return "write"; }
  int attempt() override {
    char buf[1024];
    std::memset(buf, 'x', sizeof(buf));
    return ::write(fd_, buf, sizeof(buf)) < 0 ? errno : 0;
  }

 private:
  int fd_;
};

inline int bound_udp_socket(bool nonblocking, sockaddr_in* bound_addr) {
  const int type = SOCK_DGRAM | SOCK_CLOEXEC | (nonblocking ? SOCK_NONBLOCK : 0);
  const int fd = ::socket(AF_INET, type, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("bind() failed");
  }
  socklen_t len = sizeof(*bound_addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(bound_addr), &len);
  return fd;
}

// Datagram receive with its own feeder thread, so receives genuinely
// succeed and injection has successes to convert.  The feeder runs 25%
// faster than the consumer on an absolute schedule: the socket buffer stays
// non-empty (surplus datagrams are dropped once it fills, which UDP
// permits), so the consumer never stalls in its receive timeout and its op
// rate stays steady.
class UdpRecvOp final : public OpRunner {
 public:
  explicit UdpRecvOp(double ops_per_second) {
    fd_ = bound_udp_socket(false, &addr_);
    timeval tv{0, 50 * 1000};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    send_fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (send_fd_ < 0) {
      ::close(fd_);
      throw std::runtime_error("socket() failed");
    }
    const auto period = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(1.0 /
                                      std::max(1.0, ops_per_second * 1.25)));
    feeder_ = std::thread([this, period] {
      const char payload[64] = "tick";
      auto next = std::chrono::steady_clock::now();
      while (!stop_.load(std::memory_order_relaxed)) {
        ::sendto(send_fd_, payload, sizeof(payload), MSG_NOSIGNAL,
                 reinterpret_cast<const sockaddr*>(&addr_), sizeof(addr_));
        next += period;
        std::this_thread::sleep_until(next);
      }
    });
  }
  ~UdpRecvOp() override {
    stop_.store(true, std::memory_order_relaxed);
    if (feeder_.joinable()) feeder_.join();
    ::close(send_fd_);
    ::close(fd_);
  }
  const char* syscall_name() const override { return "recvfrom"; }
  int attempt() override {
    char buf[256];
    return ::recvfrom(fd_, buf, sizeof(buf), 0, nullptr, nullptr) < 0 ? errno
                                                                      : 0;
  }

 private:
  sockaddr_in addr_{};
  int fd_ = -1;
  int send_fd_ = -1;
  std::atomic<bool> stop_{false};
  std::thread feeder_;
};

// Nonblocking receive on a silent socket: every attempt fails EAGAIN
// naturally.  Exists to exercise natural-error passthrough.
class NbRecvOp final : public OpRunner {
 public:
  NbRecvOp() { fd_ = bound_udp_socket(true, &addr_); }
  ~NbRecvOp() override { ::close(fd_); }
  const char* syscall_name() const override { return "recvfrom"; }
  int attempt() override {
    char buf[256];
    return ::recvfrom(fd_, buf, sizeof(buf), 0, nullptr, nullptr) < 0 ? errno
                                                                      : 0;
  }

 private:
  sockaddr_in addr_{};
  int fd_ = -1;
};

// Accept on a listening socket nobody connects to: natural EAGAIN stream
// via the receive timeout.
class TcpAcceptOp final : public OpRunner {
 public:
  TcpAcceptOp() {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd_, 8) != 0) {
      ::close(fd_);
      throw std::runtime_error("bind/listen failed");
    }
    timeval tv{0, 50 * 1000};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }
  ~TcpAcceptOp() override { ::close(fd_); }
  const char* syscall_name() const override { return "accept4"; }
  int attempt() override {
    const int conn = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (conn < 0) return errno;
    ::close(conn);
    return 0;
  }

 private:
  int fd_ = -1;
};

inline std::unique_ptr<OpRunner> make_op(const WorkloadSpec& spec) {
  if (spec.kind == "file_read") return std::make_unique<FileReadOp>();
  if (spec.kind == "file_write") return std::make_unique<FileWriteOp>();
  if (spec.kind == "udp_recv")
    return std::make_unique<UdpRecvOp>(spec.ops_per_second);
  if (spec.kind == "nb_recv") return std::make_unique<NbRecvOp>();
  if (spec.kind == "tcp_accept") return std::make_unique<TcpAcceptOp>();
  throw std::invalid_argument("unknown workload kind: " + spec.kind);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Target driver

class ToyTarget {
 public:
  ToyTarget(BehaviorScript script, log::EventLog& events)
      : script_(std::move(script)),
        events_(events),
        registry_(script_, counters_) {}

  // Blocks until `stop` becomes true (typically set from a signal handler).
  // Returns the process exit code.
  int run(const std::atomic<bool>& stop) {
    std::optional<MetricsServer> server;
    try {
      server.emplace(script_.metrics_port, registry_, events_);
    } catch (const PortBusyError& e) {
      events_.emit("fatal", {{"error", e.what()}});
      return 2;
    }
    events_.emit("started", {{"target_id", script_.target_id},
                             {"metrics_port", script_.metrics_port},
                             {"pid", ::getpid()}});

    std::vector<std::thread> threads;
    threads.reserve(script_.workloads.size());
    for (const auto& spec : script_.workloads) {
      threads.emplace_back([this, &spec, &stop] { run_workload(spec, stop); });
    }
    while (!stop.load(std::memory_order_relaxed)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    for (auto& t : threads) t.join();
    server->stop();
    events_.emit("stopped", {{"target_id", script_.target_id}});
    return 0;
  }

  const Counters& counters() const { return counters_; }

 private:
  void run_workload(const WorkloadSpec& spec, const std::atomic<bool>& stop) {
    std::unique_ptr<detail::OpRunner> op;
    try {
      op = detail::make_op(spec);
    } catch (const std::exception& e) {
      events_.emit("workload_setup_failed",
                   {{"workload", spec.kind}, {"error", e.what()}});
      return;
    }
    events_.emit("workload_started", {{"workload", spec.kind},
                                      {"syscall", op->syscall_name()},
                                      {"burst_ops", spec.burst_ops}});
    const bool burst = spec.burst_ops > 0;
    if (burst && spec.burst_delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(spec.burst_delay_ms));
    }
    const auto period = std::chrono::microseconds(static_cast<long>(
        1e6 / std::max(0.001, spec.ops_per_second)));
    auto next = std::chrono::steady_clock::now();
    int done_ops = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      if (burst && done_ops >= spec.burst_ops) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        continue;
      }
      if (!burst) {
        next += period;
        std::this_thread::sleep_until(next);
      }
      one_op(spec, *op);
      ++done_ops;
      if (burst && done_ops == spec.burst_ops) {
        events_.emit("burst_complete",
                     {{"workload", spec.kind}, {"ops", done_ops}});
      }
    }
  }

  // One logical operation: the raw attempt, plus whatever reaction the
  // script attaches to the failure it produced.
  void one_op(const WorkloadSpec& spec, detail::OpRunner& op) {
    int err = op.attempt();
    counters_.count_syscall(op.syscall_name(), err);
    if (err == 0) {
      counters_.count_op(spec.kind, true);
      return;
    }
    const std::string key = std::string(op.syscall_name()) + ":" + trace::errno_name(err);
    const auto rit = spec.reactions.find(key);
    const Reaction reaction =
        rit == spec.reactions.end() ? Reaction{} : rit->second;
    switch (reaction.kind) {
      case Reaction::Kind::crash:
        events_.emit("crashing", {{"workload", spec.kind},
                                  {"syscall", op.syscall_name()},
                                  {"errno", trace::errno_name(err)}});
        ::_exit(42);
      case Reaction::Kind::retry: {
        for (int i = 0; i < reaction.retry.attempts && err != 0; ++i) {
          std::this_thread::sleep_for(
              std::chrono::milliseconds(reaction.retry.backoff_ms));
          err = op.attempt();
          counters_.count_syscall(op.syscall_name(), err);
        }
        counters_.count_op(spec.kind, err == 0);
        return;
      }
      case Reaction::Kind::degrade:
        if (!registry_.degraded()) {
          events_.emit("degraded", {{"workload", spec.kind},
                                    {"syscall", op.syscall_name()},
                                    {"errno", trace::errno_name(err)}});
        }
        registry_.latch_degraded();
        counters_.count_op(spec.kind, false);
        return;
      case Reaction::Kind::ignore:
        counters_.count_op(spec.kind, false);
        return;
    }
  }

  BehaviorScript script_;
  log::EventLog& events_;
  Counters counters_;
  MetricsRegistry registry_;
};

}  // namespace syschaos::sim
