#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nigar/ar.hpp"
#include "nigar/rng.hpp"
#include "nigar/stats.hpp"

namespace nigar {

// ---------------------------------------------------------------------------
// Partial autocorrelation and order selection
// ---------------------------------------------------------------------------

/// Partial autocorrelations at lags 1..max_lag via the Durbin-Levinson
/// recursion on the empirical autocovariances.
inline std::vector<double> pacf(const TimeSeries& series,
                                std::size_t max_lag) {
  const std::size_t n = series.size();
  if (max_lag < 1) throw std::invalid_argument("pacf: max_lag must be >= 1");
  if (max_lag >= (n + 3) / 4) {
    throw std::invalid_argument("pacf: max_lag must be below n/4");
  }
  const auto acov = autocovariance(series.values, max_lag);
  if (!(acov[0] > 0.0)) {
    throw std::invalid_argument("pacf: series is constant");
  }
  std::vector<double> r(max_lag + 1);
  for (std::size_t j = 0; j <= max_lag; ++j) r[j] = acov[j] / acov[0];

  std::vector<double> out(max_lag);
  std::vector<double> phi_prev(max_lag + 1, 0.0), phi(max_lag + 1, 0.0);
  double v = 1.0 - r[1] * r[1];
  phi_prev[1] = r[1];
  out[0] = r[1];
  for (std::size_t k = 2; k <= max_lag; ++k) {
    double acc = r[k];
    for (std::size_t j = 1; j < k; ++j) acc -= phi_prev[j] * r[k - j];
    const double pkk = acc / v;
    phi[k] = pkk;
    for (std::size_t j = 1; j < k; ++j) {
      phi[j] = phi_prev[j] - pkk * phi_prev[k - j];
    }
    v *= (1.0 - pkk * pkk);
    out[k - 1] = pkk;
    std::swap(phi, phi_prev);
  }
  return out;
}

struct OrderChoice {
  std::size_t order;       // lag with the largest |PACF|
  double pacf_value;       // PACF at that lag
  double threshold;        // 1.96 / sqrt(n)
  bool significant;        // |pacf_value| above the threshold
};

/// Order = argmax over lags 1..max_lag of |PACF|, with a significance flag at
/// the usual 1.96/sqrt(n) band. Callers wanting a different rule can inspect
/// pacf() directly.
inline OrderChoice select_order(const TimeSeries& series,
                                std::size_t max_lag) {
  const auto pc = pacf(series, max_lag);
  std::size_t best = 0;
  for (std::size_t i = 1; i < pc.size(); ++i) {
    if (std::abs(pc[i]) > std::abs(pc[best])) best = i;
  }
  const double thr = 1.96 / std::sqrt(static_cast<double>(series.size()));
  return {best + 1, pc[best], thr, std::abs(pc[best]) > thr};
}

// ---------------------------------------------------------------------------
// Polynomial detrending
// ---------------------------------------------------------------------------

struct DetrendResult {
  std::size_t degree;
  std::vector<double> coefficients;  // basis: powers of the index mapped to [-1, 1]
  TimeSeries trend;
  TimeSeries residual;
};

/// Least-squares polynomial fit on the time index normalized to [-1, 1]
/// (degree 6 on raw indices in the thousands is numerically hostile).
/// trend + residual reproduces the input to machine precision.
inline DetrendResult detrend_polynomial(const TimeSeries& series,
                                        std::size_t degree) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("detrend_polynomial: need n >= 2");
  if (degree > 0 && static_cast<double>(degree) >= n / 10.0) {
    throw std::invalid_argument("detrend_polynomial: degree must be < n/10");
  }
  const auto ne = static_cast<Eigen::Index>(n);
  const auto de = static_cast<Eigen::Index>(degree);
  Eigen::MatrixXd basis(ne, de + 1);
  for (Eigen::Index t = 0; t < ne; ++t) {
    const double x =
        n == 1 ? 0.0 : 2.0 * static_cast<double>(t) / (ne - 1) - 1.0;
    double pw = 1.0;
    for (Eigen::Index j = 0; j <= de; ++j) {
      basis(t, j) = pw;
      pw *= x;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> y(series.values.data(), ne);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() < de + 1) {
    throw std::runtime_error("detrend_polynomial: rank-deficient basis");
  }
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd trend = basis * coef;

  DetrendResult out;
  out.degree = degree;
  out.coefficients.assign(coef.data(), coef.data() + degree + 1);
  std::vector<double> tr(trend.data(), trend.data() + n);
  std::vector<double> resid(n);
  for (std::size_t t = 0; t < n; ++t) resid[t] = series.values[t] - tr[t];
  out.trend = TimeSeries(std::move(tr));
  out.residual = TimeSeries(std::move(resid));
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov tests
// ---------------------------------------------------------------------------

struct KsResult {
  double statistic;
  double p_value;
};

namespace detail {

/// Asymptotic Kolmogorov distribution Q(lambda) = P(sqrt(n) D > lambda),
/// by the standard alternating series, with the theta-function form for
/// small lambda where that series converges slowly.
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.4) {
    // 1 - (sqrt(2 pi)/lambda) sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    const double f = kPi * kPi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 5; ++k) {
      sum += std::exp(-std::pow(2.0 * k - 1.0, 2) * f);
    }
    return 1.0 - std::sqrt(2.0 * kPi) / lambda * sum;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 101; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Inverse of 1 - Q (the Kolmogorov CDF) by bisection.
inline double kolmogorov_quantile(double p) {
  double lo = 1e-8, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - kolmogorov_q(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double ks_p_value(double d, double n_effective) {
  const double rn = std::sqrt(n_effective);
  return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace detail

/// One-sample KS test of a series against a reference CDF.
inline KsResult ks_one_sample(const TimeSeries& series,
                              const std::function<double(double)>& cdf) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("ks_one_sample: need n >= 2");
  std::vector<double> sorted = series.values;
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, std::abs((i + 1.0) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return {d, detail::ks_p_value(d, static_cast<double>(n))};
}

/// Two-sample KS test.
inline KsResult ks_two_sample(const TimeSeries& a, const TimeSeries& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("ks_two_sample: need n >= 2 on both sides");
  }
  std::vector<double> x = a.values, y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double xi = x[i], yj = y[j];
    if (xi <= yj) ++i;
    if (yj <= xi) ++j;
    d = std::max(d, std::abs(i / nx - j / ny));
  }
  return {d, detail::ks_p_value(d, nx * ny / (nx + ny))};
}

// ---------------------------------------------------------------------------
// Variance segmentation on the cumulative sum of squares
// ---------------------------------------------------------------------------

struct SegmentationOptions {
  std::size_t min_segment = 20;      // smallest piece considered
  double critical_level = 0.01;      // level of the split-acceptance test
  std::size_t max_segments = 2;      // 2 = single split (default behavior)
};

struct SegmentationResult {
  std::vector<std::size_t> breakpoints;  // ascending, interior; empty = no split
  std::vector<double> statistic_path;    // C_k = sum_{i<=k} x_i^2
  std::vector<std::pair<std::size_t, std::size_t>> segments;  // [begin, end)
};

namespace detail {

// Best single breakpoint of a two-piece linear approximation to the
// cumulative sum of squares, least squares on its increments (the squares
// themselves): argmin_m SSE([0,m)) + SSE([m,n)) over step-mean fits.
// Returns (breakpoint, accepted). Acceptance uses the normalized maximum
// deviation of C from its chord, max_k |C_k/C_n - (k+1)/n|, compared with the
// asymptotic Kolmogorov critical value at the configured level; raw SSE
// reduction of the two-piece fit has no scale-free threshold (an extra hinge
// soaks up a large error fraction even for homogeneous data).
inline std::pair<std::size_t, bool> best_split(std::span<const double> x2,
                                               const SegmentationOptions& opt) {
  const std::size_t n = x2.size();
  std::vector<double> cs(n + 1, 0.0), cs2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cs[i + 1] = cs[i] + x2[i];
    cs2[i + 1] = cs2[i] + x2[i] * x2[i];
  }
  const auto sse = [&](std::size_t a, std::size_t b) {  // step fit on [a, b)
    const double m = static_cast<double>(b - a);
    const double s = cs[b] - cs[a];
    return (cs2[b] - cs2[a]) - s * s / m;
  };
  std::size_t best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t m = opt.min_segment; m + opt.min_segment <= n; ++m) {
    const double v = sse(0, m) + sse(m, n);
    if (v < best_sse) {
      best_sse = v;
      best = m;
    }
  }
  if (best == 0) return {0, false};

  const double total = cs[n];
  if (!(total > 0.0)) return {0, false};
  double dmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    dmax = std::max(dmax,
                    std::abs(cs[k + 1] / total - (k + 1.0) / n));
  }
  const double crit = kolmogorov_quantile(1.0 - opt.critical_level) *
                      std::sqrt(2.0 / static_cast<double>(n));
  return {best, dmax > crit};
}

inline void segment_recurse(std::span<const double> x2, std::size_t offset,
                            const SegmentationOptions& opt,
                            std::size_t segments_left,
                            std::vector<std::size_t>& breaks) {
  if (segments_left < 2 || x2.size() < 2 * opt.min_segment) return;
  const auto [m, accepted] = best_split(x2, opt);
  if (!accepted) return;
  breaks.push_back(offset + m);
  // one level of recursion on each side, within the segment budget
  const std::size_t left_budget = segments_left / 2 + segments_left % 2;
  segment_recurse(x2.subspan(0, m), offset, opt, left_budget, breaks);
  segment_recurse(x2.subspan(m), offset + m, opt, segments_left - left_budget,
                  breaks);
}

}  // namespace detail

/// Splits a series into variance-homogeneous parts using the cumulative sum
/// of squares, which is piecewise linear in expectation when the variance
/// changes. Default configuration performs at most a single split.
inline SegmentationResult segment_by_variance(
    const TimeSeries& series, const SegmentationOptions& opt = {}) {
  const std::size_t n = series.size();
  if (n < 50) {
    throw std::invalid_argument("segment_by_variance: need n >= 50");
  }
  if (n < 2 * opt.min_segment) {
    throw std::invalid_argument("segment_by_variance: series too short");
  }
  std::vector<double> x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x2[i] = series.values[i] * series.values[i];
  }

  SegmentationResult out;
  out.statistic_path.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += x2[i];
    out.statistic_path[i] = acc;
  }
  if (!(acc > 0.0)) {
    throw std::invalid_argument("segment_by_variance: all-zero series");
  }

  detail::segment_recurse(x2, 0, opt, opt.max_segments, out.breakpoints);
  std::sort(out.breakpoints.begin(), out.breakpoints.end());

  std::size_t begin = 0;
  for (std::size_t b : out.breakpoints) {
    out.segments.emplace_back(begin, b);
    begin = b;
  }
  out.segments.emplace_back(begin, n);
  return out;
}

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

/// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^{-1/5}.
inline double silverman_bandwidth(std::span<const double> x) {
  const double sd = std::sqrt(variance(x));
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr =
      quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

/// Gaussian-kernel density estimate on a grid: (1/N) sum K_sigma(x - x_i).
/// bandwidth <= 0 selects Silverman's rule.
inline std::vector<double> kde(const TimeSeries& series,
                               std::span<const double> grid,
                               double bandwidth = 0.0) {
  if (series.size() < 2) throw std::invalid_argument("kde: need n >= 2");
  double h = bandwidth;
  if (h <= 0.0) h = silverman_bandwidth(series.values);
  if (!(h > 0.0)) {
    throw std::invalid_argument("kde: zero-variance input");
  }
  const double norm =
      1.0 / (static_cast<double>(series.size()) * h *
             std::sqrt(2.0 * detail::kPi));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double xi : series.values) {
      const double z = (grid[i] - xi) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[i] = acc * norm;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantile fan
// ---------------------------------------------------------------------------

struct QuantileFan {
  std::vector<double> levels;
  std::vector<std::vector<double>> paths;  // paths[level][time]
  std::size_t n_trajectories;
};

/// Per-time empirical quantiles over simulated model trajectories, with the
/// trend added back. Trajectory r uses the derived child seed (seed, r), so
/// the fan is reproducible and trajectories are independent.
inline QuantileFan quantile_fan(const ArNigModel& model,
                                std::span<const double> trend,
                                std::size_t n_steps, std::size_t n_paths,
                                std::span<const double> levels,
                                std::uint64_t seed) {
  if (!model.stationary()) {
    throw std::invalid_argument("quantile_fan: model not stationary");
  }
  if (n_paths < 2 || n_steps < 1) {
    throw std::invalid_argument("quantile_fan: need n_paths >= 2, n_steps >= 1");
  }
  if (!trend.empty() && trend.size() != n_steps) {
    throw std::invalid_argument(
        "quantile_fan: trend length must match n_steps");
  }
  if (levels.empty()) {
    throw std::invalid_argument("quantile_fan: empty levels");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0) ||
        (i > 0 && !(levels[i] > levels[i - 1]))) {
      throw std::invalid_argument(
          "quantile_fan: levels must be strictly increasing in (0, 1)");
    }
  }

  // simulate all trajectories, time-major storage for the quantile pass
  std::vector<double> values(n_steps * n_paths);
  std::vector<double> path(n_steps);
  for (std::size_t r = 0; r < n_paths; ++r) {
    Rng rng(Rng::derive(seed, r));
    simulate_into(model, 500, rng, path);
    for (std::size_t t = 0; t < n_steps; ++t) {
      values[t * n_paths + r] =
          path[t] + (trend.empty() ? 0.0 : trend[t]);
    }
  }

  QuantileFan fan;
  fan.levels.assign(levels.begin(), levels.end());
  fan.n_trajectories = n_paths;
  fan.paths.assign(levels.size(), std::vector<double>(n_steps));
  std::vector<double> column(n_paths);
  for (std::size_t t = 0; t < n_steps; ++t) {
    std::copy(values.begin() + t * n_paths,
              values.begin() + (t + 1) * n_paths, column.begin());
    std::sort(column.begin(), column.end());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      fan.paths[l][t] = quantile_sorted(column, levels[l]);
    }
  }
  return fan;
}

}  // namespace nigar
