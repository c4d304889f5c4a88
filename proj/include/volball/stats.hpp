#pragma once

#include <cmath>
#include <span>

namespace volball {

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

/// Sample variance (N - 1 denominator).
inline double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Variance of x / mean(x).
inline double normalized_variance(std::span<const double> x) {
  const double m = mean(x);
  return variance(x) / (m * m);
}

/// sd(x) / mean(x).
inline double coefficient_of_variation(std::span<const double> x) { return stddev(x) / mean(x); }

}  // namespace volball
