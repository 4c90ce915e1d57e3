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
#include <map>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

// Aggregate of a monitoring session: how often each syscall ran and how
// often it naturally failed, broken down by errno.  This is the raw
// material error models are synthesized from.

namespace syschaos::trace {

struct SyscallStats {
  struct PerSyscall {
    std::uint64_t invocations = 0;
    std::map<std::string, std::uint64_t> errors;  // errno name -> count

    std::uint64_t error_total() const {
      std::uint64_t n = 0;
      for (const auto& [_, c] : errors) n += c;
      return n;
    }
  };

  std::string target_id;
  double window_seconds = 0.0;
  bool truncated = false;  // target exited before the window closed
  std::map<std::string, PerSyscall> by_syscall;

  std::uint64_t total_invocations() const {
    std::uint64_t n = 0;
    for (const auto& [_, s] : by_syscall) n += s.invocations;
    return n;
  }

  std::uint64_t total_errors() const {
    std::uint64_t n = 0;
    for (const auto& [_, s] : by_syscall) n += s.error_total();
    return n;
  }
};

inline void to_json(nlohmann::json& j, const SyscallStats& s) {
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [name, per] : s.by_syscall) {
    by[name] = {{"invocations", per.invocations}, {"errors", per.errors}};
  }
  j = nlohmann::json{{"target_id", s.target_id},
                     {"window_seconds", s.window_seconds},
                     {"truncated", s.truncated},
                     {"by_syscall", by}};
}

inline void from_json(const nlohmann::json& j, SyscallStats& s) {
  j.at("target_id").get_to(s.target_id);
  j.at("window_seconds").get_to(s.window_seconds);
  j.at("truncated").get_to(s.truncated);
  s.by_syscall.clear();
  for (const auto& [name, per] : j.at("by_syscall").items()) {
    SyscallStats::PerSyscall p;
    per.at("invocations").get_to(p.invocations);
    per.at("errors").get_to(p.errors);
    s.by_syscall[name] = std::move(p);
  }
}

inline void save_stats(const SyscallStats& s, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write stats: " + path.string());
  out << nlohmann::json(s).dump(2) << '\n';
}

inline SyscallStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read stats: " + path.string());
  nlohmann::json doc;
  in >> doc;
  return doc.get<SyscallStats>();
}

}  // namespace syschaos::trace
