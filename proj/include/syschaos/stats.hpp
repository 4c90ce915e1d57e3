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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Two-sample comparison used everywhere a decision "did this metric move?"
// has to be made: steady-state detection, the observability check during
// injection, and the recovery check afterwards.
//
// The test is the two-sided Mann-Whitney U (a.k.a. Wilcoxon rank-sum) test.
// It is distribution-free, which matters because metric series coming off a
// live process are anything but normal: rates are lumpy, gauges saturate,
// and sample sizes are small.  Two evaluation routes are provided:
//
//  * an exact route that sums the null distribution of U, used for small,
//    tie-free inputs where the normal approximation is known to be poor;
//  * a normal approximation with midranks, tie correction and continuity
//    correction, used everywhere else.
//
// `mann_whitney_u` picks the route automatically; `mann_whitney_u_normal`
// forces the approximation (useful for diagnostics and calibration tests).

namespace syschaos::stats {

enum class Method {
  exact,
  normal_approximation,
};

struct ComparisonResult {
  // min(U_a, U_b); the conventional reported statistic.
  double u_statistic = 0.0;
  // Two-sided p-value in [0, 1].
  double p_value = 1.0;
  Method method = Method::normal_approximation;
};

// The exact route is taken when the combined sample size is at most this and
// the pooled sample is tie-free.  Beyond ~20 observations the exact table is
// needless work; with ties the clean rank-sum null distribution no longer
// applies and the midrank approximation is the standard fallback.
inline constexpr std::size_t kExactCombinedLimit = 20;

namespace detail {

inline void validate_sample(std::span<const double> s, const char* which) {
  if (s.empty()) {
    throw std::invalid_argument(std::string("mann_whitney_u: sample '") + which +
                                "' is empty");
  }
  for (double v : s) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string("mann_whitney_u: sample '") + which +
                                  "' contains a non-finite value");
    }
  }
}

struct PooledRanks {
  double rank_sum_a = 0.0;               // midrank sum of the first sample
  bool has_ties = false;                 // any duplicate value in the pool
  std::vector<std::size_t> tie_groups;   // sizes of tie groups (size > 1 only)
};

inline PooledRanks pooled_ranks(std::span<const double> a,
                                std::span<const double> b) {
  struct Tagged {
    double value;
    bool from_a;
  };
  std::vector<Tagged> pool;
  pool.reserve(a.size() + b.size());
  for (double v : a) pool.push_back({v, true});
  for (double v : b) pool.push_back({v, false});
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Tagged& x, const Tagged& y) { return x.value < y.value; });

  PooledRanks out;
  const std::size_t n = pool.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pool[j + 1].value == pool[i].value) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1; assign the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (pool[k].from_a) out.rank_sum_a += midrank;
    }
    const std::size_t group = j - i + 1;
    if (group > 1) {
      out.has_ties = true;
      out.tie_groups.push_back(group);
    }
    i = j + 1;
  }
  return out;
}

// P(U >= u) under the null for sample sizes m vs n, where U is the
// Mann-Whitney statistic of the first (size-m) sample.  Computed by counting
// m-subsets of the ranks {1..m+n} by rank sum with a subset-sum table; the
// counts stay below C(20,10) so doubles hold them exactly.
inline double exact_upper_tail(double u, std::size_t m, std::size_t n) {
  const std::size_t total_n = m + n;
  // Largest possible rank sum of an m-subset: the top m ranks.
  std::size_t smax = 0;
  for (std::size_t r = total_n - m + 1; r <= total_n; ++r) smax += r;

  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(smax + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t item = 1; item <= total_n; ++item) {
    for (std::size_t k = std::min(item, m); k >= 1; --k) {
      for (std::size_t s = smax; s >= item; --s) {
        ways[k][s] += ways[k - 1][s - item];
      }
    }
  }

  const double offset = static_cast<double>(m) * static_cast<double>(m + 1) / 2.0;
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t s = 0; s <= smax; ++s) {
    const double w = ways[m][s];
    if (w == 0.0) continue;
    total += w;
    const double u_of_s = static_cast<double>(s) - offset;
    if (u_of_s >= u - 1e-9) tail += w;
  }
  return tail / total;
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

// Normal-approximation route, always.  Midranks handle ties; the variance
// carries the usual tie correction; a 0.5 continuity correction is applied.
// If the pooled variance collapses to zero (every pooled value identical)
// the samples are indistinguishable by construction and p = 1.
inline ComparisonResult mann_whitney_u_normal(std::span<const double> a,
                                              std::span<const double> b) {
  detail::validate_sample(a, "a");
  detail::validate_sample(b, "b");

  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const auto ranks = detail::pooled_ranks(a, b);

  const double u1 = ranks.rank_sum_a - n1 * (n1 + 1.0) / 2.0;
  const double u2 = n1 * n2 - u1;
  const double u_min = std::min(u1, u2);
  const double u_big = std::max(u1, u2);

  ComparisonResult out;
  out.u_statistic = u_min;
  out.method = Method::normal_approximation;

  const double n = n1 + n2;
  double tie_term = 0.0;
  for (std::size_t t : ranks.tie_groups) {
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (variance <= 0.0) {
    out.p_value = 1.0;  // all pooled values identical
    return out;
  }
  const double mean = n1 * n2 / 2.0;
  const double z = (u_big - mean - 0.5) / std::sqrt(variance);
  out.p_value = std::clamp(2.0 * detail::normal_sf(z), 0.0, 1.0);
  return out;
}

// Full test: exact route when the combined sample is small and tie-free,
// normal approximation otherwise.
inline ComparisonResult mann_whitney_u(std::span<const double> a,
                                       std::span<const double> b) {
  detail::validate_sample(a, "a");
  detail::validate_sample(b, "b");

  const auto ranks = detail::pooled_ranks(a, b);
  if (!ranks.has_ties && a.size() + b.size() <= kExactCombinedLimit) {
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double u1 = ranks.rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    const double u2 = n1 * n2 - u1;
    ComparisonResult out;
    out.u_statistic = std::min(u1, u2);
    out.method = Method::exact;
    const double tail = detail::exact_upper_tail(std::max(u1, u2), a.size(), b.size());
    out.p_value = std::min(1.0, 2.0 * tail);
    return out;
  }
  return mann_whitney_u_normal(a, b);
}

// Decision helper: are the two samples distinguishable at significance
// level `alpha`?  True iff p < alpha (strict, so alpha = p keeps the null).
inline bool is_distinguishable(std::span<const double> a,
                               std::span<const double> b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("is_distinguishable: alpha must be in (0, 1)");
  }
  return mann_whitney_u(a, b).p_value < alpha;
}

}  // namespace syschaos::stats
