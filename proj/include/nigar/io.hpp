#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nigar/ar.hpp"
#include "nigar/estimators.hpp"

namespace nigar {

inline constexpr int kSchemaVersion = 1;

/// Unreadable/unwritable paths. Maps to exit code 3 in the CLI.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input content; carries the offending line. Exit code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InputKind { kPrice, kLevel, kReturn };

inline InputKind parse_input_kind(std::string_view s) {
  if (s == "price") return InputKind::kPrice;
  if (s == "level") return InputKind::kLevel;
  if (s == "return") return InputKind::kReturn;
  throw ParseError("unknown input kind: " + std::string(s));
}

struct CsvSeries {
  TimeSeries series;
  std::vector<std::string> labels;  // per-row label column, when present
  bool had_header = false;
};

namespace detail {

inline bool parse_double(std::string_view field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' ||
                         end[-1] == '\r')) --end;
  if (begin == end) return false;
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

}  // namespace detail

/// Reads a univariate series: one value per row, optional header row,
/// optional leading label/date column (kept for labeling only). Parse
/// failures report the 1-based line number.
inline CsvSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvSeries out;
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::string_view view(line);
    std::string_view label, value_field = view;
    if (const auto comma = view.rfind(','); comma != std::string_view::npos) {
      label = view.substr(0, comma);
      value_field = view.substr(comma + 1);
    }
    double v;
    if (!detail::parse_double(value_field, v)) {
      if (lineno == 1) {
        out.had_header = true;  // tolerate a header row
        continue;
      }
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": cannot parse value '" + std::string(value_field) +
                       "'");
    }
    values.push_back(v);
    if (!label.empty()) out.labels.emplace_back(label);
  }
  if (values.empty()) {
    throw ParseError(path + ": no numeric rows");
  }
  out.series = TimeSeries(std::move(values),
                          std::filesystem::path(path).filename().string());
  return out;
}

inline void write_series_csv(const std::string& path, const TimeSeries& ts,
                             const std::string& header = "value",
                             const TimeSeries* second = nullptr,
                             const std::string& second_header = "") {
  std::ofstream outf(path);
  if (!outf) throw IoError("cannot write " + path);
  outf.precision(17);
  outf << header;
  if (second) outf << ',' << second_header;
  outf << '\n';
  for (std::size_t i = 0; i < ts.size(); ++i) {
    outf << ts.values[i];
    if (second) outf << ',' << second->values[i];
    outf << '\n';
  }
  if (!outf) throw IoError("write failed: " + path);
}

/// Serializable view of a fit: everything in an EstimationReport except the
/// residual series, which travels as CSV.
struct FitRecord {
  int schema_version = kSchemaVersion;
  std::string method;
  std::vector<double> rho;
  double alpha = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  bool stationary = false;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> loglik_path;
};

inline FitRecord make_fit_record(const EstimationReport& rep) {
  const auto& inn = rep.fitted.innovation();
  FitRecord r;
  r.method = to_string(rep.method);
  r.rho.assign(rep.fitted.rho().begin(), rep.fitted.rho().end());
  r.alpha = inn.alpha();
  r.beta = inn.beta();
  r.mu = inn.mu();
  r.delta = inn.delta();
  r.gamma = inn.gamma();
  r.stationary = rep.fitted.stationary();
  r.iterations = rep.iterations;
  r.converged = rep.converged;
  r.loglik_path = rep.loglik_path;
  return r;
}

inline void to_json(nlohmann::json& j, const FitRecord& r) {
  j = nlohmann::json{{"schema_version", r.schema_version},
                     {"method", r.method},
                     {"rho", r.rho},
                     {"alpha", r.alpha},
                     {"beta", r.beta},
                     {"mu", r.mu},
                     {"delta", r.delta},
                     {"gamma", r.gamma},
                     {"stationary", r.stationary},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"loglik_path", r.loglik_path}};
}

inline void from_json(const nlohmann::json& j, FitRecord& r) {
  j.at("schema_version").get_to(r.schema_version);
  j.at("method").get_to(r.method);
  j.at("rho").get_to(r.rho);
  j.at("alpha").get_to(r.alpha);
  j.at("beta").get_to(r.beta);
  j.at("mu").get_to(r.mu);
  j.at("delta").get_to(r.delta);
  j.at("gamma").get_to(r.gamma);
  j.at("stationary").get_to(r.stationary);
  j.at("iterations").get_to(r.iterations);
  j.at("converged").get_to(r.converged);
  j.at("loglik_path").get_to(r.loglik_path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace nigar
