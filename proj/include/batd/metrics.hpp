#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "batd/numkit.hpp"

namespace batd {

/// RMSPBE curve e_0..e_T for one run. e_0 is taken before the first update.
/// After divergence the last finite value is repeated to the horizon.
struct MetricSeries {
  std::vector<double> values;
  std::string env;
  std::string algo;
  std::uint64_t seed = 0;
  std::string config_id;
  bool diverged = false;
  std::size_t diverged_at = 0;  // first step whose update overflowed
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, n - 1 denominator
  std::size_t n = 0;
};

/// Mean over t = floor(T/2) .. T of e_0..e_T.
inline double auc_ss(std::span<const double> e) {
  if (e.size() < 3) throw InvalidModel("auc_ss: need T >= 2");
  const std::size_t T = e.size() - 1;
  const std::size_t start = T / 2;
  double s = 0.0;
  for (std::size_t t = start; t <= T; ++t) s += e[t];
  return s / static_cast<double>(T - start + 1);
}

inline double auc_ss(const MetricSeries& series) { return auc_ss(series.values); }

inline double final_value(std::span<const double> e) {
  if (e.empty()) throw InvalidModel("final_value: empty series");
  return e.back();
}

inline double final_value(const MetricSeries& series) { return final_value(series.values); }

/// Mean of the last ceil(fraction * len) values.
inline double trailing_mean(std::span<const double> e, double fraction) {
  if (e.empty()) throw InvalidModel("trailing_mean: empty series");
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(e.size()))), 1, e.size());
  double s = 0.0;
  for (std::size_t i = e.size() - k; i < e.size(); ++i) s += e[i];
  return s / static_cast<double>(k);
}

namespace detail {
// Neumaier summation over sorted input; sorting first makes the result
// independent of input order.
inline double ordered_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}
}  // namespace detail

inline Aggregate aggregate(std::span<const double> values) {
  if (values.size() < 2) throw InvalidModel("aggregate: need at least two values");
  const std::vector<double> v(values.begin(), values.end());
  const double n = static_cast<double>(v.size());
  const double mean = detail::ordered_sum(v) / n;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return {mean, std::sqrt(detail::ordered_sum(std::move(sq)) / (n - 1.0)), v.size()};
}

}  // namespace batd
