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

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "syschaos/syscalls.hpp"

// An error model is the unit of fault injection: a (syscall, error code,
// rate) triple.  During injection, every successful return of `syscall` is
// independently rewritten to -`error` with probability `rate`.
//
// Models synthesized from observed behavior carry provenance: the natural
// failure fraction they were amplified from and how the clamping went.

namespace syschaos::trace {

struct ErrorModel {
  std::string syscall;      // e.g. "read"
  std::string error;        // symbolic errno, e.g. "EAGAIN"
  double rate = 0.0;        // injection probability in [0, 1]

  struct Provenance {
    double natural_rate = 0.0;     // observed failures / invocations
    double amplification = 0.0;    // multiplier applied to natural_rate
    bool clamped_to_floor = false;
    bool clamped_to_cap = false;
  };
  std::optional<Provenance> provenance;

  // Numeric errno for the symbolic name; throws on unknown names.
  int error_value() const {
    const auto v = errno_value(error);
    if (!v) throw std::invalid_argument("unknown error code: " + error);
    return *v;
  }

  // `extra_syscalls` is the explicit opt-in list for syscalls outside the
  // default injectable set.
  void validate(const std::set<std::string>& extra_syscalls = {}) const {
    if (!syscall_number(syscall)) {
      throw std::invalid_argument("unknown syscall: " + syscall);
    }
    if (!default_injectable_syscalls().count(syscall) &&
        !extra_syscalls.count(syscall)) {
      throw std::invalid_argument("syscall not eligible for injection: " + syscall);
    }
    (void)error_value();
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw std::invalid_argument("injection rate must be within [0, 1]");
    }
  }

  std::string label() const { return syscall + "/" + error; }
};

inline void to_json(nlohmann::json& j, const ErrorModel& m) {
  j = nlohmann::json{{"syscall", m.syscall}, {"error", m.error}, {"rate", m.rate}};
  if (m.provenance) {
    j["provenance"] = {{"natural_rate", m.provenance->natural_rate},
                       {"amplification", m.provenance->amplification},
                       {"clamped_to_floor", m.provenance->clamped_to_floor},
                       {"clamped_to_cap", m.provenance->clamped_to_cap}};
  }
}

inline void from_json(const nlohmann::json& j, ErrorModel& m) {
  j.at("syscall").get_to(m.syscall);
  j.at("error").get_to(m.error);
  j.at("rate").get_to(m.rate);
  if (j.contains("provenance")) {
    ErrorModel::Provenance p;
    const auto& pj = j.at("provenance");
    pj.at("natural_rate").get_to(p.natural_rate);
    pj.at("amplification").get_to(p.amplification);
    pj.at("clamped_to_floor").get_to(p.clamped_to_floor);
    pj.at("clamped_to_cap").get_to(p.clamped_to_cap);
    m.provenance = p;
  }
}

inline void save_models(const std::vector<ErrorModel>& models,
                        const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write models: " + path.string());
  out << nlohmann::json(models).dump(2) << '\n';
}

inline std::vector<ErrorModel> load_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read models: " + path.string());
  nlohmann::json doc;
  in >> doc;
  return doc.get<std::vector<ErrorModel>>();
}

}  // namespace syschaos::trace
