// Copyright 2026 The passivekit Authors. All Rights Reserved.
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

#ifndef PASSIVEKIT_STATS_HPP_
#define PASSIVEKIT_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "passivekit/util/random.hpp"

namespace passivekit {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw StatsError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

struct PearsonResult {
  double r = 0.0;
  std::size_t n = 0;
  double p = 1.0;  // two-sided, t distribution with n - 2 df
};

inline PearsonResult pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("pearson_r: vectors differ in length");
  if (x.size() < 3) throw StatsError("pearson_r: need at least 3 paired values");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw StatsError("pearson_r: non-finite value");
  }
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("pearson_r: zero variance");
  PearsonResult res;
  res.n = x.size();
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(res.n - 2);
  if (std::abs(res.r) >= 1.0) {
    res.p = 0.0;
  } else {
    const double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
    boost::math::students_t dist(df);
    res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return res;
}

// Full-length reliability from a half-length correlation.
inline double spearman_brown(double r) {
  if (r <= -1.0) throw StatsError("spearman_brown: r must exceed -1");
  return 2.0 * r / (1.0 + r);
}

struct Interval {
  double low = std::numeric_limits<double>::quiet_NaN();
  double high = std::numeric_limits<double>::quiet_NaN();
  bool contains(double v) const { return low <= v && v <= high; }
};

// Linear-interpolation quantile of a sorted sample (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatsError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapOptions {
  std::size_t iterations = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Percentile bootstrap: resample the units (participants, frames, models...)
// with replacement, recompute `statistic` on each resample, and report the
// (1-level)/2 and (1+level)/2 quantiles of the replicates.
template <typename Unit, typename Statistic>
Interval bootstrap_ci(std::span<const Unit> units, Statistic&& statistic, const BootstrapOptions& opts = {}) {
  if (opts.iterations < 1000) throw StatsError("bootstrap_ci: need at least 1000 iterations");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw StatsError("bootstrap_ci: level must lie in (0, 1)");
  if (units.size() < 2) throw StatsError("bootstrap_ci: need at least 2 units on the resampling axis");
  Rng rng(opts.seed);
  std::vector<Unit> resample(units.size());
  std::vector<double> replicates(opts.iterations);
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    for (auto& u : resample) u = units[static_cast<std::size_t>(rng.uniform_below(units.size()))];
    replicates[it] = statistic(std::span<const Unit>(resample));
  }
  std::sort(replicates.begin(), replicates.end());
  const double alpha = (1.0 - opts.level) / 2.0;
  return {quantile_sorted(replicates, alpha), quantile_sorted(replicates, 1.0 - alpha)};
}

inline Interval bootstrap_mean_ci(std::span<const double> xs, const BootstrapOptions& opts = {}) {
  return bootstrap_ci(xs, [](std::span<const double> s) { return mean(s); }, opts);
}

}  // namespace passivekit

#endif  // PASSIVEKIT_STATS_HPP_
