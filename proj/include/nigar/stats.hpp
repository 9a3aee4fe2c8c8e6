#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace nigar {

inline double mean(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

/// Empirical autocovariances about the sample mean for lags 0..max_lag,
/// with the 1/n normalization that keeps the Toeplitz matrix non-negative
/// definite.
inline std::vector<double> autocovariance(std::span<const double> x,
                                          std::size_t max_lag) {
  if (x.size() <= max_lag) {
    throw std::invalid_argument("autocovariance: series shorter than max_lag");
  }
  const double m = mean(x);
  const double n = static_cast<double>(x.size());
  std::vector<double> acov(max_lag + 1, 0.0);
  for (std::size_t j = 0; j <= max_lag; ++j) {
    double acc = 0.0;
    for (std::size_t t = j; t < x.size(); ++t) {
      acc += (x[t] - m) * (x[t - j] - m);
    }
    acov[j] = acc / n;
  }
  return acov;
}

/// Linear-interpolation quantile of a sorted sample (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, q);
}

inline double normal_pdf(double x, double mean = 0.0, double sd = 1.0) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) /
         (sd * 2.506628274631000502415765284811);  // sqrt(2 pi)
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) /
                         (sd * 1.4142135623730950488016887242097));
}

}  // namespace nigar
