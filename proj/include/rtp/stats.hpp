#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace rtp {

/// Sample moments of a scalar. merge() is associative, so per-worker
/// accumulators can be combined in index order.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    double total = static_cast<double>(n + o.n);
    double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

inline Moments moments_of(std::span<const double> xs) {
  Moments m;
  for (double x : xs) m.add(x);
  return m;
}

/// Sample variance with the standard error of that variance estimate,
/// sqrt((m4 - s^4) / n).
struct VarianceEstimate {
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
};

inline VarianceEstimate variance_with_error(std::span<const double> xs) {
  Moments m = moments_of(xs);
  double m4 = 0.0;
  for (double x : xs) {
    double d = x - m.mean;
    m4 += d * d * d * d;
  }
  double n = static_cast<double>(xs.size());
  m4 /= n;
  double s2 = m.variance();
  double biased = m.m2 / n;
  return {m.mean, s2, std::sqrt(std::max(0.0, m4 - biased * biased) / n)};
}

}  // namespace rtp
