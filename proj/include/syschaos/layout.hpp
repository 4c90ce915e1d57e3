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

#include <cstdlib>
#include <filesystem>
#include <string>

// On-disk layout for everything a study produces.  All artifacts live under
// one data directory, one subdirectory per target:
//
//   <data_dir>/<target_id>/scrape-<label>.ndjson   raw scrape logs
//   <data_dir>/<target_id>/profile.json            steady-state profile
//   <data_dir>/<target_id>/stats.json              syscall observation stats
//   <data_dir>/<target_id>/models.json             synthesized error models
//   <data_dir>/<target_id>/experiments/<label>.json    experiment records
//   <data_dir>/<target_id>/experiments/<label>.md      rendered reports
//
// The directory comes from (in order) an explicit path, the
// SYSCHAOS_DATA_DIR environment variable, or ./syschaos-data.

namespace syschaos {

class DataLayout {
 public:
  explicit DataLayout(std::filesystem::path root) : root_(std::move(root)) {}

  static DataLayout resolve(const std::string& explicit_dir = "") {
    if (!explicit_dir.empty()) return DataLayout(explicit_dir);
    if (const char* env = std::getenv("SYSCHAOS_DATA_DIR"); env && *env) {
      return DataLayout(env);
    }
    return DataLayout("syschaos-data");
  }

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path target_dir(const std::string& target_id) const {
    return root_ / target_id;
  }
  std::filesystem::path scrape_log(const std::string& target_id,
                                   const std::string& label) const {
    return target_dir(target_id) / ("scrape-" + label + ".ndjson");
  }
  std::filesystem::path profile(const std::string& target_id) const {
    return target_dir(target_id) / "profile.json";
  }
  std::filesystem::path stats(const std::string& target_id) const {
    return target_dir(target_id) / "stats.json";
  }
  std::filesystem::path models(const std::string& target_id) const {
    return target_dir(target_id) / "models.json";
  }
  std::filesystem::path experiment_record(const std::string& target_id,
                                          const std::string& label) const {
    return target_dir(target_id) / "experiments" / (label + ".json");
  }
  std::filesystem::path experiment_report(const std::string& target_id,
                                          const std::string& label) const {
    return target_dir(target_id) / "experiments" / (label + ".md");
  }

  // Create the directories an artifact path needs; returns the same path.
  static std::filesystem::path prepared(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p;
  }

 private:
  std::filesystem::path root_;
};

}  // namespace syschaos
