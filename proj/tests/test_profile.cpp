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

#include "syschaos/profile.hpp"

#include <filesystem>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "support/synthetic.hpp"

namespace {

namespace sm = syschaos::metrics;
namespace sp = syschaos::profile;

constexpr int kInterval = 5;
constexpr int kDuration = 150;  // 30 points per epoch
constexpr int kTicks = kDuration / kInterval;

sm::MetricEpoch epoch_from(const std::map<std::string, testsupport::SeriesSpec>& specs,
                           double start = 1.7e9) {
  return sm::build_epoch(
      testsupport::make_scrape_log("toy", kInterval, kDuration, specs, {}, start));
}

}  // namespace

TEST_CASE("identical epochs profile every active metric as steady", "[profile]") {
  const std::map<std::string, testsupport::SeriesSpec> specs{
      {"rate_total", {"counter", testsupport::noisy_counter(11, kTicks, kInterval, 40, 3), {}}},
      {"level", {"gauge", testsupport::noisy_gauge(12, kTicks, 80, 4), {}}}};
  const auto e1 = epoch_from(specs, 1.7e9);
  const auto e2 = epoch_from(specs, 1.7e9 + kDuration);
  const auto profile = sp::infer_steady_state(e1, e2, 0.01);

  CHECK(profile.total_count() == 2);
  CHECK(profile.active_count() == 2);
  CHECK(profile.steady_count() == 2);
  for (const auto& name : {"rate_total", "level"}) {
    const auto& m = profile.metrics.at(name);
    REQUIRE(m.steadiness == sp::Steadiness::steady);
    CHECK(*m.p_value == 1.0);  // literally identical samples
    CHECK(m.reference.size() == 2 * kTicks);
  }
}

TEST_CASE("a shifted epoch is unstable and gets no reference", "[profile]") {
  const auto e1 = epoch_from(
      {{"level", {"gauge", testsupport::noisy_gauge(21, kTicks, 50, 2), {}}}});
  const auto e2 = epoch_from(
      {{"level", {"gauge", testsupport::noisy_gauge(22, kTicks, 66, 2), {}}}},
      1.7e9 + kDuration);
  const auto profile = sp::infer_steady_state(e1, e2, 0.01);

  const auto& m = profile.metrics.at("level");
  CHECK(m.activity == sm::Activity::active);
  REQUIRE(m.steadiness == sp::Steadiness::unstable);
  CHECK(*m.p_value < 0.01);
  CHECK(m.reference.empty());
  CHECK(profile.steady_metrics().empty());
}

TEST_CASE("inactive in either epoch means inactive overall", "[profile]") {
  const auto noisy = testsupport::noisy_gauge(31, kTicks, 10, 1);
  // Flat in epoch 1, active in epoch 2; and a metric absent from epoch 2.
  const auto e1 = epoch_from({{"warms_up", {"gauge", testsupport::constant(5), {}}},
                              {"vanishes", {"gauge", noisy, {}}}});
  const auto e2 = epoch_from({{"warms_up", {"gauge", noisy, {}}}},
                             1.7e9 + kDuration);
  const auto profile = sp::infer_steady_state(e1, e2, 0.01);

  CHECK(profile.metrics.at("warms_up").activity == sm::Activity::inactive);
  CHECK(profile.metrics.at("vanishes").activity == sm::Activity::inactive);
  CHECK_FALSE(profile.metrics.at("warms_up").steadiness.has_value());
  CHECK(profile.active_count() == 0);
}

TEST_CASE("profile partitions a mixed metric population", "[profile]") {
  std::map<std::string, testsupport::SeriesSpec> base;
  // 3 steady (same generator both epochs), 2 unstable (shifted), 2 inactive.
  for (int i = 0; i < 3; ++i) {
    base["steady_" + std::to_string(i)] = {
        "gauge", testsupport::noisy_gauge(100 + static_cast<unsigned>(i), kTicks, 40, 3), {}};
  }
  base["flat"] = {"gauge", testsupport::constant(1.0), {}};
  base["idle_total"] = {"counter", testsupport::constant(999.0), {}};

  auto shifted = base;
  for (int i = 0; i < 2; ++i) {
    const auto name = "drift_" + std::to_string(i);
    base[name] = {"gauge", testsupport::noisy_gauge(200 + static_cast<unsigned>(i), kTicks, 10, 1), {}};
    shifted[name] = {"gauge", testsupport::noisy_gauge(300 + static_cast<unsigned>(i), kTicks, 30, 1), {}};
  }

  const auto profile = sp::infer_steady_state(epoch_from(base),
                                              epoch_from(shifted, 1.7e9 + kDuration),
                                              0.01);
  CHECK(profile.total_count() == 7);
  CHECK(profile.active_count() == 5);
  CHECK(profile.steady_count() == 3);
  CHECK(profile.steady_metrics() ==
        std::vector<std::string>{"steady_0", "steady_1", "steady_2"});
}

TEST_CASE("steadiness is monotone in alpha", "[profile]") {
  // Raising alpha can only move metrics from steady to unstable, never back.
  std::mt19937_64 seeds(0xa1fa);
  for (int iter = 0; iter < 10; ++iter) {
    const auto s1 = seeds();
    const auto s2 = seeds();
    const auto e1 = epoch_from({{"m", {"gauge", testsupport::noisy_gauge(s1, kTicks, 20, 2), {}}}});
    const auto e2 = epoch_from({{"m", {"gauge", testsupport::noisy_gauge(s2, kTicks, 20.6, 2), {}}}},
                               1.7e9 + kDuration);
    bool prev_steady = true;
    for (double alpha : {0.001, 0.01, 0.05, 0.2, 0.5}) {
      const auto p = sp::infer_steady_state(e1, e2, alpha);
      const bool steady = p.metrics.at("m").steadiness == sp::Steadiness::steady;
      if (!prev_steady) CHECK_FALSE(steady);
      prev_steady = steady;
    }
  }
}

TEST_CASE("profiles round-trip through disk", "[profile]") {
  const std::map<std::string, testsupport::SeriesSpec> specs{
      {"a_total", {"counter", testsupport::noisy_counter(41, kTicks, kInterval, 25, 2), {}}},
      {"b", {"gauge", testsupport::noisy_gauge(42, kTicks, 7, 0.5), {}}},
      {"flat", {"gauge", testsupport::constant(0.0), {}}}};
  const auto original = sp::infer_steady_state(epoch_from(specs),
                                               epoch_from(specs, 1.7e9 + kDuration),
                                               0.05);

  const auto dir = std::filesystem::temp_directory_path() / "syschaos-profile-test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "profile.json";
  sp::save_profile(original, path);
  const auto loaded = sp::load_profile(path);
  std::filesystem::remove_all(dir);

  CHECK(loaded.target_id == original.target_id);
  CHECK(loaded.alpha == original.alpha);
  CHECK(loaded.interval_seconds == original.interval_seconds);
  CHECK(loaded.epoch_duration_seconds == original.epoch_duration_seconds);
  CHECK(loaded.created_at == original.created_at);
  REQUIRE(loaded.metrics.size() == original.metrics.size());
  for (const auto& [name, m] : original.metrics) {
    const auto& l = loaded.metrics.at(name);
    CHECK(l.kind == m.kind);
    CHECK(l.activity == m.activity);
    CHECK(l.steadiness == m.steadiness);
    CHECK(l.p_value == m.p_value);
    CHECK(l.reference == m.reference);  // exact doubles
  }
}

TEST_CASE("mismatched epochs are rejected", "[profile]") {
  const auto e1 = epoch_from({{"m", {"gauge", testsupport::constant(1), {}}}});
  auto log2 = testsupport::make_scrape_log(
      "toy", kInterval, kDuration - kInterval,
      {{"m", {"gauge", testsupport::constant(1), {}}}});
  const auto e2 = sm::build_epoch(log2);
  CHECK_THROWS_AS(sp::infer_steady_state(e1, e2, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(sp::infer_steady_state(e1, e1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sp::infer_steady_state(e1, e1, 1.5), std::invalid_argument);
}
