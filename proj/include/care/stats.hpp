#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "care/errors.hpp"

namespace care {

struct MannWhitneyResult {
  double u = 0.0;  // statistic for the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Midranks (1-based) of the pooled values, in input order.
template <class T>
std::vector<double> midranks(std::span<const T> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && !(values[order[i]] < values[order[j + 1]])) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

// Counts rank-sum outcomes over all ways to choose `need` of ranks[from..].
inline void enumerate_rank_sums(const std::vector<double>& ranks, std::size_t from,
                                std::size_t need, double sum, std::vector<double>& out) {
  if (need == 0) {
    out.push_back(sum);
    return;
  }
  for (std::size_t i = from; i + need <= ranks.size(); ++i) {
    enumerate_rank_sums(ranks, i + 1, need - 1, sum + ranks[i], out);
  }
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// Two-sided Mann-Whitney U test with midranks for ties. When the pooled
/// size is at most `exact_limit` the null distribution is enumerated over
/// every assignment of the observed ranks; otherwise a tie-corrected normal
/// approximation with continuity correction is used.
template <class T>
MannWhitneyResult mann_whitney_u(std::span<const T> a, std::span<const T> b,
                                 std::size_t exact_limit = 20) {
  if (a.empty() || b.empty()) throw EmptySample();
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  std::vector<T> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = midranks(std::span<const T>(pooled));

  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
  const double shift = static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  MannWhitneyResult res;
  res.u = r1 - shift;
  const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double dev = std::abs(res.u - mu);

  if (n <= exact_limit) {
    std::vector<double> sums;
    detail::enumerate_rank_sums(ranks, 0, n1, 0.0, sums);
    std::size_t extreme = 0;
    for (double s : sums) {
      if (std::abs(s - shift - mu) >= dev - 1e-9) ++extreme;
    }
    res.p = static_cast<double>(extreme) / static_cast<double>(sums.size());
    res.exact = true;
    return res;
  }

  double tie_term = 0.0;
  {
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
  }
  const double nd = static_cast<double>(n);
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                     ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;
    return res;
  }
  const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * detail::normal_sf(z));
  return res;
}

template <class T>
MannWhitneyResult mann_whitney_u(const std::vector<T>& a, const std::vector<T>& b,
                                 std::size_t exact_limit = 20) {
  return mann_whitney_u(std::span<const T>(a), std::span<const T>(b), exact_limit);
}

template <class T>
double median(std::vector<T> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[m]);
  return (static_cast<double>(v[m - 1]) + static_cast<double>(v[m])) / 2.0;
}

}  // namespace care
