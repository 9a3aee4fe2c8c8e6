#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nigar/ar.hpp"
#include "nigar/diagnostics.hpp"
#include "nigar/estimators.hpp"
#include "nigar/io.hpp"
#include "nigar/stats.hpp"

namespace nigar {

/// The real-data analysis chain: variance segmentation of the (log-return)
/// series, per-segment polynomial detrending, PACF order selection, EM fit,
/// residual distribution checks, KDE table, and a quantile fan with the
/// trend added back.
struct PipelineOptions {
  InputKind input_kind = InputKind::kPrice;
  std::size_t detrend_degree = 6;
  std::size_t max_lag = 30;
  std::size_t fan_paths = 1000;
  std::vector<double> fan_levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t seed = 7;
  EmConfig em;
  SegmentationOptions segmentation;
  std::size_t kde_grid_size = 512;
  std::string out_dir;  // empty: keep everything in memory only
};

struct SegmentReport {
  std::size_t begin = 0;  // [begin, end) in observation index space
  std::size_t end = 0;
  std::size_t selected_order = 0;
  bool order_significant = false;
  std::vector<double> pacf_values;
  DetrendResult detrend;
  FitRecord fit;
  KsResult ks_normal{0.0, 1.0};  // residuals vs moment-matched normal
  KsResult ks_nig{0.0, 1.0};     // residuals vs a fitted-NIG sample
  std::vector<std::string> errors;  // first entry aborts the later stages
};

struct PipelineResult {
  std::size_t n_observations = 0;
  std::vector<std::size_t> breakpoints;  // observation index of each segment start
  std::vector<SegmentReport> segments;
  nlohmann::json summary;
};

namespace detail {

inline void write_columns_csv(const std::string& path,
                              const std::vector<std::string>& headers,
                              const std::vector<const std::vector<double>*>& cols) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  for (std::size_t i = 0; i < headers.size(); ++i) {
    out << headers[i] << (i + 1 < headers.size() ? ',' : '\n');
  }
  const std::size_t rows = cols.empty() ? 0 : cols.front()->size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out << (*cols[c])[r] << (c + 1 < cols.size() ? ',' : '\n');
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

inline PipelineResult run_pipeline(const TimeSeries& input,
                                   const PipelineOptions& opt) {
  opt.em.validate();
  PipelineResult result;
  result.n_observations = input.size();

  const bool writing = !opt.out_dir.empty();
  if (writing) std::filesystem::create_directories(opt.out_dir);
  const auto bundle_path = [&](const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
  };

  // --- segmentation input -------------------------------------------------
  std::vector<double> seg_input;
  if (opt.input_kind == InputKind::kPrice) {
    if (input.size() < 2) {
      throw std::invalid_argument("pipeline: need at least two prices");
    }
    seg_input.resize(input.size() - 1);
    for (std::size_t t = 0; t + 1 < input.size(); ++t) {
      if (!(input.values[t] > 0.0) || !(input.values[t + 1] > 0.0)) {
        throw std::invalid_argument(
            "pipeline: prices must be positive to take log-returns");
      }
      seg_input[t] = std::log(input.values[t + 1] / input.values[t]);
    }
  } else {
    seg_input = input.values;
  }

  // aborts the whole run when the statistic degenerates (constant series)
  const auto segmentation =
      segment_by_variance(TimeSeries(seg_input), opt.segmentation);

  // map breakpoints from return space to observation space
  const std::size_t shift = opt.input_kind == InputKind::kPrice ? 1 : 0;
  for (std::size_t b : segmentation.breakpoints) {
    result.breakpoints.push_back(b + shift);
  }

  if (writing) {
    detail::write_columns_csv(bundle_path("segmentation_input.csv"),
                              {"value"}, {&seg_input});
    detail::write_columns_csv(bundle_path("cusum.csv"),
                              {"cumulative_sum_of_squares"},
                              {&segmentation.statistic_path});
  }

  // --- per-segment stages ---------------------------------------------------
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  {
    std::size_t begin = 0;
    for (std::size_t b : result.breakpoints) {
      ranges.emplace_back(begin, b);
      begin = b;
    }
    ranges.emplace_back(begin, input.size());
  }

  for (std::size_t k = 0; k < ranges.size(); ++k) {
    SegmentReport seg;
    seg.begin = ranges[k].first;
    seg.end = ranges[k].second;
    const std::string tag = "seg" + std::to_string(k + 1);
    const TimeSeries piece(
        std::vector<double>(input.values.begin() + seg.begin,
                            input.values.begin() + seg.end),
        tag);

    try {
      seg.detrend = detrend_polynomial(piece, opt.detrend_degree);
      if (writing) {
        detail::write_columns_csv(
            bundle_path(tag + "_detrend.csv"), {"value", "trend", "residual"},
            {&piece.values, &seg.detrend.trend.values,
             &seg.detrend.residual.values});
      }

      const std::size_t max_lag =
          std::min(opt.max_lag, seg.detrend.residual.size() / 4 - 1);
      seg.pacf_values = pacf(seg.detrend.residual, max_lag);
      const auto choice = select_order(seg.detrend.residual, max_lag);
      seg.selected_order = choice.order;
      seg.order_significant = choice.significant;
      if (writing) {
        detail::write_columns_csv(bundle_path(tag + "_pacf.csv"), {"pacf"},
                                  {&seg.pacf_values});
      }

      const auto rep = em_fit(seg.detrend.residual, seg.selected_order, opt.em);
      seg.fit = make_fit_record(rep);
      if (writing) {
        write_json(bundle_path(tag + "_fit.json"), seg.fit);
        detail::write_columns_csv(bundle_path(tag + "_residuals.csv"),
                                  {"residual"}, {&rep.residuals.values});
      }

      const auto& eps = rep.residuals;
      const double m = mean(eps.values);
      const double sd = std::sqrt(variance(eps.values));
      seg.ks_normal = ks_one_sample(
          eps, [&](double x) { return normal_cdf(x, m, sd); });

      const auto& inn = rep.fitted.innovation();
      const auto nig_sample =
          sample_nig(inn, eps.size(), Rng::derive(opt.seed, 100 + k));
      seg.ks_nig = ks_two_sample(eps, TimeSeries(nig_sample));

      {
        std::vector<double> grid(opt.kde_grid_size);
        const auto [mn, mx] =
            std::minmax_element(eps.values.begin(), eps.values.end());
        const double pad = 0.1 * (*mx - *mn);
        for (std::size_t i = 0; i < grid.size(); ++i) {
          grid[i] = *mn - pad +
                    (*mx - *mn + 2 * pad) * static_cast<double>(i) /
                        (grid.size() - 1);
        }
        const auto dens = kde(eps, grid);
        std::vector<double> nig_dens(grid.size()), norm_dens(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
          nig_dens[i] = nig_pdf(grid[i], inn);
          norm_dens[i] = normal_pdf(grid[i], m, sd);
        }
        if (writing) {
          detail::write_columns_csv(
              bundle_path(tag + "_kde.csv"),
              {"x", "kde", "fitted_nig_pdf", "normal_pdf"},
              {&grid, &dens, &nig_dens, &norm_dens});
        }
      }

      if (!rep.fitted.stationary()) {
        throw std::runtime_error("fitted model not stationary, no fan");
      }
      const auto fan = quantile_fan(rep.fitted, seg.detrend.trend.values,
                                    piece.size(), opt.fan_paths,
                                    opt.fan_levels,
                                    Rng::derive(opt.seed, 200 + k));
      if (writing) {
        std::vector<std::string> headers{"observed"};
        std::vector<const std::vector<double>*> cols{&piece.values};
        for (std::size_t l = 0; l < fan.levels.size(); ++l) {
          headers.push_back(
              "q" + std::to_string(static_cast<int>(fan.levels[l] * 100)));
          cols.push_back(&fan.paths[l]);
        }
        detail::write_columns_csv(bundle_path(tag + "_quantiles.csv"),
                                  headers, cols);
      }
    } catch (const std::exception& e) {
      seg.errors.emplace_back(e.what());
    }
    result.segments.push_back(std::move(seg));
  }

  // --- summary ---------------------------------------------------------------
  nlohmann::json seg_json = nlohmann::json::array();
  for (const auto& seg : result.segments) {
    nlohmann::json j{{"begin", seg.begin},
                     {"end", seg.end},
                     {"length", seg.end - seg.begin},
                     {"selected_order", seg.selected_order},
                     {"order_significant", seg.order_significant},
                     {"pacf", seg.pacf_values},
                     {"errors", seg.errors}};
    if (seg.errors.empty()) {
      j["fit"] = seg.fit;
      j["ks_normal"] = {{"statistic", seg.ks_normal.statistic},
                        {"p_value", seg.ks_normal.p_value}};
      j["ks_nig"] = {{"statistic", seg.ks_nig.statistic},
                     {"p_value", seg.ks_nig.p_value}};
    }
    seg_json.push_back(std::move(j));
  }
  result.summary = nlohmann::json{
      {"schema_version", kSchemaVersion},
      {"input_kind", opt.input_kind == InputKind::kPrice
                         ? "price"
                         : (opt.input_kind == InputKind::kLevel ? "level"
                                                                : "return")},
      {"n_observations", result.n_observations},
      {"breakpoints", result.breakpoints},
      {"seed", opt.seed},
      {"segments", std::move(seg_json)}};
  if (writing) write_json(bundle_path("summary.json"), result.summary);
  return result;
}

}  // namespace nigar
