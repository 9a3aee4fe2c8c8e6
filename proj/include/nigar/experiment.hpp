#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nigar/ar.hpp"
#include "nigar/estimators.hpp"
#include "nigar/stats.hpp"

namespace nigar {

enum class ExperimentCase { kAr2Case1, kAr1Case2, kCustom };

inline const char* to_string(ExperimentCase c) {
  switch (c) {
    case ExperimentCase::kAr2Case1: return "ar2_case1";
    case ExperimentCase::kAr1Case2: return "ar1_case2";
    case ExperimentCase::kCustom: return "custom";
  }
  return "?";
}

/// Monte Carlo replication setup: simulate n_trajectories series from the
/// model and fit each with the requested estimators.
struct ExperimentConfig {
  ExperimentCase case_id = ExperimentCase::kCustom;
  std::size_t n_trajectories = 1000;
  std::size_t series_length = 1000;
  ArNigModel model;
  std::vector<FitMethod> estimators{FitMethod::kEm, FitMethod::kYw,
                                    FitMethod::kCls};
  std::uint64_t seed = 1;
  std::string output_path;
  EmConfig em;
  std::size_t burn_in = 500;
  std::size_t n_threads = 0;  // 0 = hardware concurrency

  explicit ExperimentConfig(ArNigModel m) : model(std::move(m)) {}

  void validate() const {
    if (n_trajectories < 1) {
      throw std::invalid_argument("experiment: n_trajectories must be >= 1");
    }
    if (series_length <= model.order()) {
      throw std::invalid_argument(
          "experiment: series_length must exceed the model order");
    }
    em.validate();
  }
};

/// AR(2) with rho = (0.5, 0.3) and NIG(1, 0, 0, 2) innovations,
/// 1000 trajectories of length 1000.
inline ExperimentConfig ar2_case1_config() {
  ExperimentConfig cfg(ArNigModel({0.5, 0.3}, NigParams(1.0, 0.0, 0.0, 2.0)));
  cfg.case_id = ExperimentCase::kAr2Case1;
  cfg.n_trajectories = 1000;
  cfg.series_length = 1000;
  return cfg;
}

/// AR(1) with rho = 0.9610 and NIG(0.0087, 0, 0, 70.3882) innovations,
/// 1000 trajectories of length 579.
inline ExperimentConfig ar1_case2_config() {
  ExperimentConfig cfg(
      ArNigModel({0.9610}, NigParams(0.0087, 0.0, 0.0, 70.3882)));
  cfg.case_id = ExperimentCase::kAr1Case2;
  cfg.n_trajectories = 1000;
  cfg.series_length = 579;
  return cfg;
}

struct ParamStats {
  std::string parameter;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std_dev = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_outliers = 0;  // beyond 1.5 IQR from the quartiles
};

struct EstimatorTable {
  FitMethod method;
  std::vector<ParamStats> params;
  std::size_t failures = 0;
  /// EM log-likelihood increments below -1e-8, totalled over replications
  std::size_t loglik_violations = 0;
  /// column-major raw estimates, one row per successful replication
  std::vector<std::vector<double>> raw;
};

struct ExperimentSummary {
  ExperimentCase case_id;
  std::size_t n_replications = 0;
  std::size_t series_length = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<EstimatorTable> tables;
};

namespace detail {

inline ParamStats summarize_parameter(const std::string& name,
                                      std::vector<double> values) {
  ParamStats st;
  st.parameter = name;
  if (values.empty()) return st;
  st.mean = nigar::mean(values);
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - st.mean) * (v - st.mean);
    st.std_dev = std::sqrt(acc / (values.size() - 1));
  }
  std::sort(values.begin(), values.end());
  st.median = quantile_sorted(values, 0.5);
  st.q25 = quantile_sorted(values, 0.25);
  st.q75 = quantile_sorted(values, 0.75);
  const double iqr = st.q75 - st.q25;
  const double lo = st.q25 - 1.5 * iqr, hi = st.q75 + 1.5 * iqr;
  for (double v : values) {
    if (v < lo || v > hi) ++st.n_outliers;
  }
  return st;
}

}  // namespace detail

/// Runs the replication study. Replication r simulates with the derived
/// child seed (seed, r), so each replication is individually reproducible
/// and the full run is deterministic regardless of thread count. Failed
/// replications are counted per estimator, not fatal.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n_est = cfg.estimators.size();
  const std::size_t p = cfg.model.order();
  const std::size_t n_params = p + 2;  // rho_1..rho_p, delta, alpha
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // estimates[e][r] = parameter vector of estimator e on replication r
  std::vector<std::vector<std::vector<double>>> estimates(
      n_est, std::vector<std::vector<double>>(cfg.n_trajectories));
  std::vector<std::vector<std::size_t>> violations(
      n_est, std::vector<std::size_t>(cfg.n_trajectories, 0));

  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= cfg.n_trajectories) return;
      TimeSeries ts;
      try {
        ts = simulate(cfg.model, cfg.series_length, cfg.burn_in,
                      Rng::derive(cfg.seed, r));
      } catch (...) {
        for (std::size_t e = 0; e < n_est; ++e) {
          estimates[e][r].assign(n_params, nan);
        }
        continue;
      }
      for (std::size_t e = 0; e < n_est; ++e) {
        try {
          EstimationReport rep = [&] {
            switch (cfg.estimators[e]) {
              case FitMethod::kEm: return em_fit(ts, p, cfg.em);
              case FitMethod::kYw: return yw_fit(ts, p, cfg.em);
              default: return cls_fit(ts, p, cfg.em);
            }
          }();
          auto& row = estimates[e][r];
          row.assign(rep.fitted.rho().begin(), rep.fitted.rho().end());
          row.push_back(rep.fitted.innovation().delta());
          row.push_back(rep.fitted.innovation().alpha());
          for (std::size_t i = 1; i < rep.loglik_path.size(); ++i) {
            if (rep.loglik_path[i] - rep.loglik_path[i - 1] < -1e-8) {
              ++violations[e][r];
            }
          }
        } catch (...) {
          estimates[e][r].assign(n_params, nan);
        }
      }
    }
  };

  std::size_t n_threads = cfg.n_threads;
  if (n_threads == 0) {
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  n_threads = std::min<std::size_t>(n_threads, cfg.n_trajectories);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentSummary summary;
  summary.case_id = cfg.case_id;
  summary.n_replications = cfg.n_trajectories;
  summary.series_length = cfg.series_length;
  summary.seed = cfg.seed;

  std::vector<std::string> names;
  for (std::size_t i = 1; i <= p; ++i) names.push_back("rho" + std::to_string(i));
  names.push_back("delta");
  names.push_back("alpha");

  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorTable table;
    table.method = cfg.estimators[e];
    for (std::size_t r = 0; r < cfg.n_trajectories; ++r) {
      const auto& row = estimates[e][r];
      if (!row.empty() && std::isfinite(row[0])) {
        table.raw.push_back(row);
      } else {
        ++table.failures;
      }
      table.loglik_violations += violations[e][r];
    }
    for (std::size_t k = 0; k < n_params; ++k) {
      std::vector<double> column;
      column.reserve(table.raw.size());
      for (const auto& row : table.raw) column.push_back(row[k]);
      table.params.push_back(detail::summarize_parameter(names[k],
                                                         std::move(column)));
    }
    summary.tables.push_back(std::move(table));
  }

  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return summary;
}

}  // namespace nigar
