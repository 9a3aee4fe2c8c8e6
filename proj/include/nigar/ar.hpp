#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nigar/nig.hpp"
#include "nigar/rng.hpp"

namespace nigar {

/// Ordered real-valued observations. Every estimator and diagnostic takes one
/// of these.
struct TimeSeries {
  std::vector<double> values;
  std::string origin_label;

  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> v, std::string label = "")
      : values(std::move(v)), origin_label(std::move(label)) {
    if (values.empty()) {
      throw std::invalid_argument("TimeSeries: must hold at least one value");
    }
    for (double x : values) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("TimeSeries: non-finite value");
      }
    }
  }

  std::size_t size() const { return values.size(); }
};

struct StationarityCheck {
  bool stationary;
  std::vector<double> root_moduli;  // |z| for roots of 1 - rho_1 z - ... - rho_p z^p
};

/// Roots via eigenvalues of the companion matrix of the recursion; its
/// eigenvalues are the reciprocals of the characteristic-polynomial roots.
/// Stationary iff every root modulus exceeds 1 + 1e-10 (the tolerance guards
/// against false accepts at the unit circle).
inline StationarityCheck check_stationarity(std::span<const double> rho) {
  if (rho.empty()) {
    throw std::invalid_argument("check_stationarity: empty coefficient vector");
  }
  for (double r : rho) {
    if (!std::isfinite(r)) {
      throw std::invalid_argument("check_stationarity: non-finite coefficient");
    }
  }
  const auto p = static_cast<Eigen::Index>(rho.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = rho[i];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;

  StationarityCheck out;
  out.stationary = true;
  const Eigen::VectorXcd ev = companion.eigenvalues();
  out.root_moduli.reserve(rho.size());
  for (Eigen::Index i = 0; i < p; ++i) {
    const double lambda = std::abs(ev[i]);
    const double root = lambda > 0.0
                            ? 1.0 / lambda
                            : std::numeric_limits<double>::infinity();
    out.root_moduli.push_back(root);
    if (!(root > 1.0 + 1e-10)) out.stationary = false;
  }
  std::sort(out.root_moduli.begin(), out.root_moduli.end());
  return out;
}

/// AR(p) model Y_t = rho^T (Y_{t-1},...,Y_{t-p}) + eps_t with NIG innovations.
class ArNigModel {
 public:
  ArNigModel(std::vector<double> rho, NigParams innovation)
      : rho_(std::move(rho)), innovation_(innovation) {
    const auto chk = check_stationarity(rho_);
    if (!chk.stationary) {
      throw std::invalid_argument(
          "ArNigModel: coefficients are not stationary");
    }
    stationary_ = true;
  }

  /// Builds without the stationarity gate. Estimators use this for fitted
  /// coefficients, which can land outside the stationary region on
  /// pathological inputs; `stationary()` reports the actual status.
  static ArNigModel unchecked(std::vector<double> rho, NigParams innovation) {
    return ArNigModel(std::move(rho), innovation, UncheckedTag{});
  }

  std::size_t order() const { return rho_.size(); }
  std::span<const double> rho() const { return rho_; }
  const NigParams& innovation() const { return innovation_; }
  bool stationary() const { return stationary_; }

 private:
  struct UncheckedTag {};
  ArNigModel(std::vector<double> rho, NigParams innovation, UncheckedTag)
      : rho_(std::move(rho)), innovation_(innovation) {
    if (rho_.empty()) {
      throw std::invalid_argument("ArNigModel: order must be >= 1");
    }
    stationary_ = check_stationarity(rho_).stationary;
  }

  std::vector<double> rho_;
  NigParams innovation_;
  bool stationary_ = false;
};

/// Simulates into a caller-provided buffer reusing an existing random stream.
/// The first p values are drawn from the innovation law, the recursion then
/// runs for burn_in + n steps and the first burn_in of those are discarded.
/// `innovations`, when non-empty, receives the eps_t aligned with the output.
inline void simulate_into(const ArNigModel& model, std::size_t burn_in,
                          Rng& rng, std::span<double> out,
                          std::span<double> innovations = {}) {
  const std::size_t p = model.order();
  const auto rho = model.rho();
  const std::size_t total = p + burn_in + out.size();
  std::vector<double> y(total), eps(total);
  for (std::size_t t = 0; t < p; ++t) {
    eps[t] = sample_nig_one(model.innovation(), rng);
    y[t] = eps[t];
  }
  for (std::size_t t = p; t < total; ++t) {
    eps[t] = sample_nig_one(model.innovation(), rng);
    double acc = eps[t];
    for (std::size_t i = 0; i < p; ++i) acc += rho[i] * y[t - 1 - i];
    y[t] = acc;
  }
  std::copy(y.begin() + p + burn_in, y.end(), out.begin());
  if (!innovations.empty()) {
    std::copy(eps.begin() + p + burn_in, eps.end(), innovations.begin());
  }
}

inline TimeSeries simulate(const ArNigModel& model, std::size_t n,
                           std::size_t burn_in, std::uint64_t seed) {
  if (!model.stationary()) {
    throw std::invalid_argument("simulate: model is not stationary");
  }
  if (n == 0) throw std::invalid_argument("simulate: n must be >= 1");
  Rng rng(seed);
  std::vector<double> y(n);
  simulate_into(model, burn_in, rng, y);
  return TimeSeries(std::move(y));
}

struct SimulationDraw {
  TimeSeries series;
  TimeSeries innovations;
};

/// Like simulate(), additionally returning the innovation sequence; the
/// series is bit-identical to simulate() with the same seed.
inline SimulationDraw simulate_with_innovations(const ArNigModel& model,
                                                std::size_t n,
                                                std::size_t burn_in,
                                                std::uint64_t seed) {
  if (!model.stationary()) {
    throw std::invalid_argument("simulate: model is not stationary");
  }
  if (n == 0) throw std::invalid_argument("simulate: n must be >= 1");
  Rng rng(seed);
  std::vector<double> y(n), eps(n);
  simulate_into(model, burn_in, rng, y, eps);
  return {TimeSeries(std::move(y)), TimeSeries(std::move(eps))};
}

/// log p(y_t | history, model) = log f(y_t; alpha, beta, mu + rho^T h, delta).
/// history[0] is y_{t-1}, history[1] is y_{t-2}, and so on.
inline double conditional_log_density(double y_t,
                                      std::span<const double> history,
                                      const ArNigModel& model) {
  if (history.size() != model.order()) {
    throw std::invalid_argument(
        "conditional_log_density: history length must equal model order");
  }
  const auto rho = model.rho();
  double shift = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) shift += rho[i] * history[i];
  return nig_log_pdf(y_t, nig_shift(model.innovation(), shift));
}

/// Theoretical autocovariances gamma_0..gamma_max_lag and the innovation
/// variance sigma_eps^2 = delta alpha^2 / gamma^3.
struct AutocovarianceSet {
  std::vector<double> lags;
  double sigma_eps2;
};

/// Solves the (p+1)x(p+1) linear system
///   gamma_0 = sigma^2 + sum_j rho_j gamma_j
///   gamma_j = sum_i rho_i gamma_{|j-i|},  j = 1..p
/// exactly, then extends by the recursion gamma_j = sum_i rho_i gamma_{j-i}.
/// Covariances are about the process mean, so the relations hold for any
/// (mu, beta).
inline AutocovarianceSet theoretical_moments(const ArNigModel& model,
                                             std::size_t max_lag) {
  if (!model.stationary()) {
    throw std::invalid_argument("theoretical_moments: model not stationary");
  }
  const std::size_t p = model.order();
  const auto rho = model.rho();
  const double sigma2 = nig_moments(model.innovation()).variance;

  const auto dim = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  A(0, 0) = 1.0;
  for (std::size_t j = 1; j <= p; ++j) A(0, j) -= rho[j - 1];
  b(0) = sigma2;
  for (std::size_t j = 1; j <= p; ++j) {
    A(j, j) += 1.0;
    for (std::size_t i = 1; i <= p; ++i) {
      const auto lag = static_cast<Eigen::Index>(j > i ? j - i : i - j);
      A(j, lag) -= rho[i - 1];
    }
  }
  const Eigen::VectorXd g = A.colPivHouseholderQr().solve(b);

  AutocovarianceSet out;
  out.sigma_eps2 = sigma2;
  out.lags.resize(max_lag + 1);
  for (std::size_t j = 0; j <= std::min(p, max_lag); ++j) out.lags[j] = g(j);
  for (std::size_t j = p + 1; j <= max_lag; ++j) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= p; ++i) acc += rho[i - 1] * out.lags[j - i];
    out.lags[j] = acc;
  }
  return out;
}

/// E[Y_t] = (mu + delta beta / gamma) / (1 - rho_1 - ... - rho_p).
inline double mean_formula(const ArNigModel& model) {
  if (!model.stationary()) {
    throw std::invalid_argument("mean_formula: model not stationary");
  }
  const auto& inn = model.innovation();
  double coef_sum = 0.0;
  for (double r : model.rho()) coef_sum += r;
  return (inn.mu() + inn.delta() * inn.beta() / inn.gamma()) / (1.0 - coef_sum);
}

/// Closed-form stationary variance of an AR(2),
///   (1 - rho2) sigma^2 / (1 - rho2 - rho1^2 - rho2^2 - rho1^2 rho2 + rho2^3).
inline double ar2_stationary_variance(double rho1, double rho2,
                                      double sigma_eps2) {
  const double den = 1.0 - rho2 - rho1 * rho1 - rho2 * rho2 -
                     rho1 * rho1 * rho2 + rho2 * rho2 * rho2;
  return (1.0 - rho2) * sigma_eps2 / den;
}

/// Closed-form stationary variance of an AR(3). The rho1 rho3^3 term is the
/// one consistent with the Yule-Walker recursion (validated against the
/// linear-system solution).
inline double ar3_stationary_variance(double r1, double r2, double r3,
                                      double sigma_eps2) {
  const double num = (1.0 - r2 - r1 * r3 - r3 * r3) * sigma_eps2;
  const double den =
      1.0 - r2 - r1 * r3 - r1 * r1 - r2 * r2 - 2.0 * r3 * r3 -
      r1 * r1 * r2 - r2 * r2 * r3 * r3 - r1 * r1 * r3 * r3 -
      r1 * r1 * r1 * r3 - 4.0 * r1 * r2 * r3 + r2 * r3 * r3 +
      r1 * r3 * r3 * r3 + r2 * r2 * r2 + r3 * r3 * r3 * r3 +
      r1 * r2 * r2 * r3;
  return num / den;
}

}  // namespace nigar
