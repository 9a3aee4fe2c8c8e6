// Command-line front end: simulation, fitting, the real-data pipeline,
// Monte Carlo experiments, and the standalone diagnostics.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nigar/nigar.hpp"

namespace {

using nigar::EmConfig;
using nigar::FitMethod;
using nigar::IoError;
using nigar::ParseError;

std::vector<double> parse_double_list(const std::string& csv,
                                      const char* what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError(std::string("cannot parse ") + what + ": '" + item +
                       "'");
    }
  }
  if (out.empty()) {
    throw ParseError(std::string("empty list for ") + what);
  }
  return out;
}

FitMethod parse_method(const std::string& s) {
  if (s == "em") return FitMethod::kEm;
  if (s == "yw") return FitMethod::kYw;
  if (s == "cls") return FitMethod::kCls;
  throw ParseError("unknown method: " + s + " (expected em|yw|cls)");
}

struct ModelFlags {
  std::string rho = "0.5,0.3";
  double alpha = 1.0;
  double beta = 0.0;
  double mu = 0.0;
  double delta = 2.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--rho", rho, "AR coefficients, comma separated");
    cmd->add_option("--alpha", alpha, "NIG tail steepness");
    cmd->add_option("--beta", beta, "NIG asymmetry");
    cmd->add_option("--mu", mu, "NIG location");
    cmd->add_option("--delta", delta, "NIG scale");
  }

  nigar::ArNigModel model() const {
    return {parse_double_list(rho, "--rho"),
            nigar::NigParams(alpha, beta, mu, delta)};
  }
};

void emit_json(const nlohmann::json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    nigar::write_json(out, j);
  }
}

// --- experiment config file: flat key = value lines ------------------------

nigar::ExperimentConfig load_experiment_config(
    const std::string& path, const std::string& case_flag) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected key = value");
      }
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }

  std::string case_name = case_flag;
  if (const auto it = kv.find("case"); it != kv.end() && case_name.empty()) {
    case_name = it->second;
  }
  nigar::ExperimentConfig cfg = [&] {
    if (case_name == "ar2_case1" || case_name.empty()) {
      auto c = nigar::ar2_case1_config();
      if (case_name.empty()) c.case_id = nigar::ExperimentCase::kCustom;
      return c;
    }
    if (case_name == "ar1_case2") return nigar::ar1_case2_config();
    if (case_name == "custom") {
      auto c = nigar::ar2_case1_config();
      c.case_id = nigar::ExperimentCase::kCustom;
      return c;
    }
    throw ParseError("unknown case: " + case_name);
  }();

  std::vector<double> rho(cfg.model.rho().begin(), cfg.model.rho().end());
  double alpha = cfg.model.innovation().alpha();
  double beta = cfg.model.innovation().beta();
  double mu = cfg.model.innovation().mu();
  double delta = cfg.model.innovation().delta();
  bool model_touched = false;

  for (const auto& [key, value] : kv) {
    try {
      if (key == "case") {
        continue;
      } else if (key == "n_trajectories") {
        cfg.n_trajectories = std::stoul(value);
      } else if (key == "series_length") {
        cfg.series_length = std::stoul(value);
      } else if (key == "rho") {
        rho = parse_double_list(value, "rho");
        model_touched = true;
      } else if (key == "alpha") {
        alpha = std::stod(value);
        model_touched = true;
      } else if (key == "beta") {
        beta = std::stod(value);
        model_touched = true;
      } else if (key == "mu") {
        mu = std::stod(value);
        model_touched = true;
      } else if (key == "delta") {
        delta = std::stod(value);
        model_touched = true;
      } else if (key == "estimators") {
        cfg.estimators.clear();
        std::stringstream ss(value);
        std::string m;
        while (std::getline(ss, m, ',')) cfg.estimators.push_back(parse_method(m));
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "output_path") {
        cfg.output_path = value;
      } else if (key == "tolerance") {
        cfg.em.tolerance = std::stod(value);
      } else if (key == "max_iterations") {
        cfg.em.max_iterations = std::stoul(value);
      } else if (key == "symmetric") {
        cfg.em.symmetric_mode = (value == "true" || value == "1" || value == "on");
      } else if (key == "burn_in") {
        cfg.burn_in = std::stoul(value);
      } else if (key == "threads") {
        cfg.n_threads = std::stoul(value);
      } else {
        throw ParseError(path + ": unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(path + ": bad value for '" + key + "': " + value);
    }
  }
  if (model_touched) {
    cfg.model = nigar::ArNigModel(rho, nigar::NigParams(alpha, beta, mu, delta));
    if (case_name.empty()) cfg.case_id = nigar::ExperimentCase::kCustom;
  }
  return cfg;
}

nlohmann::json summary_to_json(const nigar::ExperimentSummary& s) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : s.tables) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : t.params) {
      params.push_back({{"parameter", p.parameter},
                        {"mean", p.mean},
                        {"std", p.std_dev},
                        {"median", p.median},
                        {"q25", p.q25},
                        {"q75", p.q75},
                        {"n_outliers", p.n_outliers}});
    }
    tables.push_back({{"method", nigar::to_string(t.method)},
                      {"failures", t.failures},
                      {"parameters", std::move(params)}});
  }
  return {{"schema_version", nigar::kSchemaVersion},
          {"case", nigar::to_string(s.case_id)},
          {"n_replications", s.n_replications},
          {"series_length", s.series_length},
          {"seed", s.seed},
          {"wall_seconds", s.wall_seconds},
          {"tables", std::move(tables)}};
}

void write_summary_csv(const std::string& path,
                       const nigar::ExperimentSummary& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "method,parameter,mean,std,median,q25,q75,n_outliers,failures\n";
  for (const auto& t : s.tables) {
    for (const auto& p : t.params) {
      out << nigar::to_string(t.method) << ',' << p.parameter << ',' << p.mean
          << ',' << p.std_dev << ',' << p.median << ',' << p.q25 << ','
          << p.q75 << ',' << p.n_outliers << ',' << t.failures << '\n';
    }
  }
}

void write_raw_csv(const std::string& path,
                   const nigar::ExperimentSummary& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "method,replication";
  if (!s.tables.empty()) {
    for (const auto& p : s.tables.front().params) out << ',' << p.parameter;
  }
  out << '\n';
  for (const auto& t : s.tables) {
    for (std::size_t r = 0; r < t.raw.size(); ++r) {
      out << nigar::to_string(t.method) << ',' << r;
      for (double v : t.raw[r]) out << ',' << v;
      out << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AR(p) models with normal inverse Gaussian innovations"};
  app.require_subcommand(1);

  // --- simulate -------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "simulate an AR(p)-NIG series");
  ModelFlags sim_model;
  sim_model.attach(sim);
  std::size_t sim_n = 1000, sim_burn = 500;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  bool sim_innov = false;
  sim->add_option("-n,--length", sim_n, "series length");
  sim->add_option("--burn-in", sim_burn, "burn-in length");
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--out", sim_out, "output CSV path")->required();
  sim->add_flag("--with-innovations", sim_innov,
                "also write the innovation sequence");

  // --- fit ------------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "fit an AR(p)-NIG model to a CSV series");
  std::string fit_input, fit_out, fit_method = "em";
  std::size_t fit_order = 1;
  EmConfig fit_cfg;
  std::string fit_kind = "level";
  fit->add_option("input", fit_input, "input CSV (one value per row)")
      ->required();
  fit->add_option("--order", fit_order, "AR order p")->required();
  fit->add_option("--method", fit_method, "em|yw|cls");
  fit->add_option("--tolerance", fit_cfg.tolerance, "stopping tolerance");
  fit->add_option("--max-iter", fit_cfg.max_iterations, "iteration cap");
  fit->add_flag("--symmetric,!--no-symmetric", fit_cfg.symmetric_mode,
                "keep mu = beta = 0 (default on)");
  fit->add_option("--out", fit_out, "output JSON path ('-' = stdout)");

  // --- pipeline ---------------------------------------------------------------
  auto* pipe = app.add_subcommand(
      "pipeline", "segmentation, detrending, order selection, EM fit and "
                  "residual diagnostics on a price series");
  std::string pipe_input, pipe_out, pipe_kind = "price";
  nigar::PipelineOptions pipe_opt;
  pipe->add_option("input", pipe_input, "input CSV")->required();
  pipe->add_option("--out", pipe_out, "output bundle directory")->required();
  pipe->add_option("--input-kind", pipe_kind, "price|level|return");
  pipe->add_option("--seed", pipe_opt.seed, "seed for comparison samples/fans");
  pipe->add_option("--paths", pipe_opt.fan_paths, "quantile fan trajectories");
  pipe->add_option("--max-lag", pipe_opt.max_lag, "PACF lags inspected");
  pipe->add_option("--degree", pipe_opt.detrend_degree, "detrend degree");
  pipe->add_option("--tolerance", pipe_opt.em.tolerance, "EM tolerance");
  pipe->add_option("--max-iter", pipe_opt.em.max_iterations, "EM iteration cap");
  pipe->add_option("--min-segment", pipe_opt.segmentation.min_segment,
                   "smallest segment considered");
  pipe->add_option("--split-level", pipe_opt.segmentation.critical_level,
                   "split acceptance level");
  pipe->add_option("--max-segments", pipe_opt.segmentation.max_segments,
                   "segment budget (2 = single split)");

  // --- experiment ---------------------------------------------------------------
  auto* exp = app.add_subcommand(
      "experiment", "Monte Carlo replication study over simulated series");
  std::string exp_config, exp_case, exp_out;
  std::size_t exp_traj = 0, exp_len = 0, exp_threads = 0;
  std::uint64_t exp_seed = 0;
  bool exp_seed_set = false;
  std::string exp_estimators;
  exp->add_option("--config", exp_config, "flat key=value config file");
  exp->add_option("--case", exp_case, "ar2_case1|ar1_case2|custom");
  exp->add_option("--trajectories", exp_traj, "replication count");
  exp->add_option("--length", exp_len, "series length");
  exp->add_option("--seed", exp_seed, "master seed")
      ->each([&](const std::string&) { exp_seed_set = true; });
  exp->add_option("--estimators", exp_estimators, "subset of em,yw,cls");
  exp->add_option("--threads", exp_threads, "worker threads (0 = hardware)");
  exp->add_option("--out", exp_out, "output prefix (.json/.csv/_raw.csv)");

  // --- pacf ---------------------------------------------------------------------
  auto* pacf_cmd = app.add_subcommand("pacf", "partial autocorrelations and "
                                              "suggested AR order");
  std::string pacf_input, pacf_out;
  std::size_t pacf_lags = 30;
  pacf_cmd->add_option("input", pacf_input, "input CSV")->required();
  pacf_cmd->add_option("--max-lag", pacf_lags, "largest lag");
  pacf_cmd->add_option("--out", pacf_out, "output JSON ('-' = stdout)");

  // --- segment ---------------------------------------------------------------
  auto* seg = app.add_subcommand("segment", "variance-change segmentation");
  std::string seg_input, seg_out, seg_kind = "return";
  nigar::SegmentationOptions seg_opt;
  std::string seg_stat_out;
  seg->add_option("input", seg_input, "input CSV")->required();
  seg->add_option("--input-kind", seg_kind,
                  "price (log-returns first)|level|return");
  seg->add_option("--min-segment", seg_opt.min_segment, "smallest segment");
  seg->add_option("--split-level", seg_opt.critical_level, "acceptance level");
  seg->add_option("--max-segments", seg_opt.max_segments, "segment budget");
  seg->add_option("--out", seg_out, "output JSON ('-' = stdout)");
  seg->add_option("--stat-out", seg_stat_out, "CSV for the statistic path");

  // --- quantiles ---------------------------------------------------------------
  auto* quant = app.add_subcommand("quantiles",
                                   "empirical quantile fan of a fitted model");
  ModelFlags q_model;
  q_model.attach(quant);
  std::size_t q_steps = 100, q_paths = 1000;
  std::uint64_t q_seed = 1;
  std::string q_levels = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string q_trend, q_out;
  quant->add_option("--steps", q_steps, "time steps");
  quant->add_option("--paths", q_paths, "simulated trajectories");
  quant->add_option("--levels", q_levels, "quantile levels");
  quant->add_option("--seed", q_seed, "seed");
  quant->add_option("--trend-csv", q_trend, "trend to add back (CSV)");
  quant->add_option("--out", q_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      const auto model = sim_model.model();
      if (sim_innov) {
        const auto draw =
            nigar::simulate_with_innovations(model, sim_n, sim_burn, sim_seed);
        nigar::write_series_csv(sim_out, draw.series, "value",
                                &draw.innovations, "innovation");
      } else {
        const auto ts = nigar::simulate(model, sim_n, sim_burn, sim_seed);
        nigar::write_series_csv(sim_out, ts);
      }
    } else if (fit->parsed()) {
      const auto csv = nigar::read_series_csv(fit_input);
      const auto method = parse_method(fit_method);
      const auto rep = [&] {
        switch (method) {
          case FitMethod::kEm: return nigar::em_fit(csv.series, fit_order, fit_cfg);
          case FitMethod::kYw: return nigar::yw_fit(csv.series, fit_order, fit_cfg);
          default: return nigar::cls_fit(csv.series, fit_order, fit_cfg);
        }
      }();
      emit_json(nigar::make_fit_record(rep), fit_out);
    } else if (pipe->parsed()) {
      pipe_opt.input_kind = nigar::parse_input_kind(pipe_kind);
      pipe_opt.out_dir = pipe_out;
      const auto csv = nigar::read_series_csv(pipe_input);
      const auto result = nigar::run_pipeline(csv.series, pipe_opt);
      std::cout << result.summary.dump(2) << '\n';
    } else if (exp->parsed()) {
      auto cfg = load_experiment_config(exp_config, exp_case);
      if (exp_traj > 0) cfg.n_trajectories = exp_traj;
      if (exp_len > 0) cfg.series_length = exp_len;
      if (exp_seed_set) cfg.seed = exp_seed;
      if (exp_threads > 0) cfg.n_threads = exp_threads;
      if (!exp_estimators.empty()) {
        cfg.estimators.clear();
        std::stringstream ss(exp_estimators);
        std::string m;
        while (std::getline(ss, m, ',')) cfg.estimators.push_back(parse_method(m));
      }
      if (!exp_out.empty()) cfg.output_path = exp_out;
      const auto summary = nigar::run_experiment(cfg);
      const auto j = summary_to_json(summary);
      if (cfg.output_path.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        nigar::write_json(cfg.output_path + ".json", j);
        write_summary_csv(cfg.output_path + ".csv", summary);
        write_raw_csv(cfg.output_path + "_raw.csv", summary);
      }
    } else if (pacf_cmd->parsed()) {
      const auto csv = nigar::read_series_csv(pacf_input);
      const std::size_t lags =
          std::min(pacf_lags, csv.series.size() / 4 - 1);
      const auto values = nigar::pacf(csv.series, lags);
      const auto choice = nigar::select_order(csv.series, lags);
      emit_json(nlohmann::json{{"schema_version", nigar::kSchemaVersion},
                               {"pacf", values},
                               {"order", choice.order},
                               {"pacf_at_order", choice.pacf_value},
                               {"threshold", choice.threshold},
                               {"significant", choice.significant}},
                pacf_out);
    } else if (seg->parsed()) {
      const auto csv = nigar::read_series_csv(seg_input);
      const auto kind = nigar::parse_input_kind(seg_kind);
      std::vector<double> values;
      if (kind == nigar::InputKind::kPrice) {
        for (std::size_t t = 0; t + 1 < csv.series.size(); ++t) {
          if (!(csv.series.values[t] > 0.0)) {
            throw std::invalid_argument("segment: prices must be positive");
          }
          values.push_back(std::log(csv.series.values[t + 1] /
                                    csv.series.values[t]));
        }
      } else {
        values = csv.series.values;
      }
      const auto res =
          nigar::segment_by_variance(nigar::TimeSeries(values), seg_opt);
      nlohmann::json segments = nlohmann::json::array();
      for (const auto& [b, e] : res.segments) {
        segments.push_back({{"begin", b}, {"end", e}});
      }
      emit_json(nlohmann::json{{"schema_version", nigar::kSchemaVersion},
                               {"breakpoints", res.breakpoints},
                               {"segments", std::move(segments)}},
                seg_out);
      if (!seg_stat_out.empty()) {
        nigar::write_series_csv(seg_stat_out,
                                nigar::TimeSeries(res.statistic_path),
                                "cumulative_sum_of_squares");
      }
    } else if (quant->parsed()) {
      const auto model = q_model.model();
      const auto levels = parse_double_list(q_levels, "--levels");
      std::vector<double> trend;
      if (!q_trend.empty()) {
        trend = nigar::read_series_csv(q_trend).series.values;
      }
      const auto fan =
          nigar::quantile_fan(model, trend, q_steps, q_paths, levels, q_seed);
      std::ofstream out(q_out);
      if (!out) throw IoError("cannot write " + q_out);
      out.precision(17);
      out << "t";
      for (double l : fan.levels) out << ",q" << static_cast<int>(l * 100);
      out << '\n';
      for (std::size_t t = 0; t < q_steps; ++t) {
        out << t;
        for (std::size_t l = 0; l < fan.levels.size(); ++l) {
          out << ',' << fan.paths[l][t];
        }
        out << '\n';
      }
    }
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
