#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nigar/ar.hpp"
#include "nigar/bessel.hpp"
#include "nigar/nig.hpp"
#include "nigar/stats.hpp"

namespace nigar {

enum class FitMethod { kEm, kYw, kCls };

inline const char* to_string(FitMethod m) {
  switch (m) {
    case FitMethod::kEm: return "EM";
    case FitMethod::kYw: return "YW";
    case FitMethod::kCls: return "CLS";
  }
  return "?";
}

/// Full parameter vector theta = (alpha, beta, mu, delta, rho).
struct EmTheta {
  double alpha = 1.0;
  double beta = 0.0;
  double mu = 0.0;
  double delta = 1.0;
  std::vector<double> rho;

  double gamma() const {
    return std::sqrt((alpha - beta) * (alpha + beta));
  }
  NigParams innovation() const { return {alpha, beta, mu, delta}; }
};

struct EmConfig {
  double tolerance = 1e-4;
  std::size_t max_iterations = 500;
  bool symmetric_mode = true;  // keep mu = beta = 0 fixed, as in every
                               // experiment; full updates are experimental
  std::optional<EmTheta> initial_theta;

  void validate() const {
    if (!(tolerance > 0.0)) {
      throw std::invalid_argument("EmConfig: tolerance must be positive");
    }
    if (max_iterations < 1) {
      throw std::invalid_argument("EmConfig: max_iterations must be >= 1");
    }
  }
};

/// E-step output: residuals, their posterior mixing moments, and the observed
/// log-likelihood at the expansion point.
struct EmState {
  EmTheta theta;
  std::vector<double> residuals;  // eps_t = y_t - rho^T y_{t-1}, t = p+1..n
  std::vector<double> s;          // s_t = E(G | eps_t)
  std::vector<double> w;          // w_t = E(G^{-1} | eps_t)
  double s_bar = 0.0;
  double w_bar = 0.0;
  double eps_bar = 0.0;
  double loglik = 0.0;
};

struct EstimationReport {
  FitMethod method;
  ArNigModel fitted;
  std::size_t iterations;
  std::vector<double> loglik_path;
  bool converged;
  TimeSeries residuals;
};

namespace detail {

inline std::vector<double> ar_residuals(std::span<const double> y,
                                        std::span<const double> rho) {
  const std::size_t p = rho.size();
  std::vector<double> eps(y.size() - p);
  for (std::size_t t = p; t < y.size(); ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < p; ++i) pred += rho[i] * y[t - 1 - i];
    eps[t - p] = y[t] - pred;
  }
  return eps;
}

// Posterior moments and log-likelihood in one sweep; a single Bessel
// evaluation per residual serves both.
inline void posterior_sweep(std::span<const double> eps, const EmTheta& th,
                            std::vector<double>& s, std::vector<double>& w,
                            double& loglik) {
  const double gamma = th.gamma();
  const double log_const = std::log(th.alpha / nigar::detail::kPi) +
                           th.delta * gamma - th.beta * th.mu;
  s.resize(eps.size());
  w.resize(eps.size());
  loglik = 0.0;
  for (std::size_t t = 0; t < eps.size(); ++t) {
    const double z = (eps[t] - th.mu) / th.delta;
    const double phi = 1.0 + z * z;
    const double root_phi = std::sqrt(phi);
    const double arg = th.alpha * th.delta * root_phi;
    const auto k = bessel_k012(arg);
    const double scale = th.delta * root_phi / th.alpha;
    s[t] = scale * k.k0_over_k1;
    w[t] = k.k2_over_k1 / scale;
    loglik += log_const - 0.5 * std::log(phi) + k.log_k1 + th.beta * eps[t];
  }
}

}  // namespace detail

/// E-step: residuals at theta's coefficients, posterior moments s_t, w_t of
/// the latent mixing variables, and the observed log-likelihood at theta.
inline EmState em_e_step(const TimeSeries& series, const EmTheta& theta) {
  const std::size_t p = theta.rho.size();
  if (p == 0) throw std::invalid_argument("em_e_step: order must be >= 1");
  if (series.size() <= p) {
    throw std::invalid_argument("em_e_step: series shorter than the order");
  }
  theta.innovation();  // validates the distribution part

  EmState st;
  st.theta = theta;
  st.residuals = detail::ar_residuals(series.values, theta.rho);
  detail::posterior_sweep(st.residuals, theta, st.s, st.w, st.loglik);
  st.s_bar = mean(st.s);
  st.w_bar = mean(st.w);
  st.eps_bar = mean(st.residuals);
  return st;
}

/// M-step. Coefficients come from the weighted normal equations
///   rho = (sum w_t Y_{t-1} Y_{t-1}^T)^{-1} sum (w_t y_t - mu w_t - beta) Y_{t-1},
/// then (in full mode) beta and mu from their closed forms, and always
///   delta = sqrt(s_bar / (s_bar w_bar - 1)), gamma = delta / s_bar,
///   alpha = sqrt(gamma^2 + beta^2).
inline EmTheta em_m_step(const EmState& state, const TimeSeries& series,
                         const EmConfig& config) {
  config.validate();
  const std::size_t p = state.theta.rho.size();
  const auto& y = series.values;
  const std::size_t n_eff = y.size() - p;
  if (state.w.size() != n_eff || state.s.size() != n_eff) {
    throw std::invalid_argument("em_m_step: state does not match the series");
  }

  const auto pe = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(pe, pe);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pe);
  for (std::size_t t = p; t < y.size(); ++t) {
    const double wt = state.w[t - p];
    const double target = wt * y[t] - state.theta.mu * wt - state.theta.beta;
    for (std::size_t i = 0; i < p; ++i) {
      const double yi = y[t - 1 - i];
      rhs(i) += target * yi;
      for (std::size_t j = i; j < p; ++j) {
        gram(i, j) += wt * yi * y[t - 1 - j];
      }
    }
  }
  for (Eigen::Index i = 0; i < pe; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) {
    throw std::runtime_error("em_m_step: singular weighted Gram matrix");
  }
  const Eigen::VectorXd rho_new = lu.solve(rhs);

  EmTheta next;
  next.rho.assign(rho_new.data(), rho_new.data() + p);

  if (config.symmetric_mode) {
    next.beta = 0.0;
    next.mu = 0.0;
  } else {
    // closed-form beta and mu at the updated coefficients
    const auto eps = detail::ar_residuals(y, next.rho);
    const double n = static_cast<double>(n_eff);
    double sum_we = 0.0, sum_e = 0.0;
    for (std::size_t t = 0; t < eps.size(); ++t) {
      sum_we += state.w[t] * eps[t];
      sum_e += eps[t];
    }
    const double eps_bar = sum_e / n;
    const double denom = n * (1.0 - state.s_bar * state.w_bar);
    if (denom == 0.0) {
      throw std::runtime_error("em_m_step: degenerate beta update");
    }
    next.beta = (sum_we - n * state.w_bar * eps_bar) / denom;
    next.mu = (sum_we - n * next.beta) / (n * state.w_bar);
  }

  const double sw = state.s_bar * state.w_bar;
  if (!(sw > 1.0)) {
    throw std::runtime_error(
        "em_m_step: s_bar * w_bar <= 1, delta update undefined");
  }
  next.delta = std::sqrt(state.s_bar / (sw - 1.0));
  const double gamma = next.delta / state.s_bar;
  next.alpha = std::sqrt(gamma * gamma + next.beta * next.beta);
  return next;
}

namespace detail {

// Relative-change stopping criterion over (alpha, delta, rho), lifted to
// vectors as the max over components; parameters below 1e-12 in magnitude are
// compared by absolute change instead.
inline double relative_change(const EmTheta& prev, const EmTheta& next) {
  const auto rel = [](double a, double b) {
    const double scale = std::abs(a);
    return scale > 1e-12 ? std::abs(b - a) / scale : std::abs(b - a);
  };
  double crit = std::max(rel(prev.alpha, next.alpha),
                         rel(prev.delta, next.delta));
  for (std::size_t i = 0; i < prev.rho.size(); ++i) {
    crit = std::max(crit, rel(prev.rho[i], next.rho[i]));
  }
  return crit;
}

struct IidNigFit {
  EmTheta theta;
  std::vector<double> loglik_path;
  std::size_t iterations = 0;
  bool converged = false;
};

// Distribution-only EM on a residual series: the coefficient part is frozen,
// each iteration re-weights and updates (alpha, delta) (plus mu, beta in full
// mode). Used directly by the YW/CLS fits and for the EM initializer.
inline IidNigFit fit_nig_iid_em(std::span<const double> eps,
                                const EmConfig& config) {
  config.validate();
  IidNigFit fit;
  const double n = static_cast<double>(eps.size());

  double v = 0.0;
  {
    const double m = mean(eps);
    for (double e : eps) v += (e - m) * (e - m);
    v /= n;
  }
  if (!(v > 0.0)) v = 1e-24;  // degenerate residuals; collapse guard below

  EmTheta th;
  th.delta = std::sqrt(v);  // delta/alpha = v with delta*alpha = 1
  th.alpha = 1.0 / th.delta;
  th.rho = {};  // unused here

  std::vector<double> s, w;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    double ll;
    posterior_sweep(eps, th, s, w, ll);
    fit.loglik_path.push_back(ll);
    const double s_bar = mean(s), w_bar = mean(w);
    const double sw = s_bar * w_bar;
    if (!(sw > 1.0)) {
      throw std::runtime_error(
          "fit_nig_iid_em: s_bar * w_bar <= 1, delta update undefined");
    }
    EmTheta next = th;
    if (!config.symmetric_mode) {
      double sum_we = 0.0, sum_e = 0.0;
      for (std::size_t t = 0; t < eps.size(); ++t) {
        sum_we += w[t] * eps[t];
        sum_e += eps[t];
      }
      const double eps_bar = sum_e / n;
      next.beta = (sum_we - n * w_bar * eps_bar) / (n * (1.0 - sw));
      next.mu = (sum_we - n * next.beta) / (n * w_bar);
    }
    next.delta = std::sqrt(s_bar / (sw - 1.0));
    const double gamma = next.delta / s_bar;
    next.alpha = std::sqrt(gamma * gamma + next.beta * next.beta);

    double crit = std::max(std::abs(next.alpha - th.alpha) / th.alpha,
                           std::abs(next.delta - th.delta) / th.delta);
    if (!config.symmetric_mode) {
      crit = std::max({crit, std::abs(next.mu - th.mu),
                       std::abs(next.beta - th.beta)});
    }
    th = next;
    fit.iterations = it + 1;
    if (crit < config.tolerance) {
      fit.converged = true;
      break;
    }
    if (th.delta < 1e-120) break;  // point-mass residuals, cannot converge
  }
  double ll;
  posterior_sweep(eps, th, s, w, ll);
  fit.loglik_path.push_back(ll);
  fit.theta = th;
  return fit;
}

inline std::vector<double> solve_yule_walker(std::span<const double> y,
                                             std::size_t p) {
  const auto acov = autocovariance(y, p);
  const auto pe = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd R(pe, pe);
  Eigen::VectorXd r(pe);
  for (std::size_t i = 0; i < p; ++i) {
    r(i) = acov[i + 1];
    for (std::size_t j = 0; j < p; ++j) {
      R(i, j) = acov[i > j ? i - j : j - i];
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
  if (!lu.isInvertible()) {
    throw std::runtime_error("yw_fit: singular autocovariance matrix");
  }
  const Eigen::VectorXd rho = lu.solve(r);
  return {rho.data(), rho.data() + p};
}

inline std::vector<double> solve_cls(std::span<const double> y,
                                     std::size_t p) {
  const auto pe = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(pe, pe);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pe);
  for (std::size_t t = p; t < y.size(); ++t) {
    for (std::size_t i = 0; i < p; ++i) {
      rhs(i) += y[t] * y[t - 1 - i];
      for (std::size_t j = i; j < p; ++j) {
        gram(i, j) += y[t - 1 - i] * y[t - 1 - j];
      }
    }
  }
  for (Eigen::Index i = 0; i < pe; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) {
    throw std::runtime_error("cls_fit: singular design matrix");
  }
  const Eigen::VectorXd rho = lu.solve(rhs);
  return {rho.data(), rho.data() + p};
}

inline EstimationReport report_from_baseline(FitMethod method,
                                             const TimeSeries& series,
                                             std::vector<double> rho,
                                             const EmConfig& config) {
  auto eps = ar_residuals(series.values, rho);
  auto fit = fit_nig_iid_em(eps, config);
  EstimationReport rep{
      method,
      ArNigModel::unchecked(std::move(rho), fit.theta.innovation()),
      fit.iterations,
      std::move(fit.loglik_path),
      fit.converged,
      TimeSeries(std::move(eps))};
  return rep;
}

}  // namespace detail

/// Full EM fit: alternates E and M steps until the relative change in
/// (alpha, delta, rho) drops below the tolerance (plus absolute change in
/// mu, beta in full mode) or the iteration cap is hit. Non-convergence is
/// reported, not thrown. Initialized from the Yule-Walker coefficients and a
/// moment match delta/alpha = var(residuals) with delta * alpha = 1, unless
/// the config supplies a starting point.
inline EstimationReport em_fit(const TimeSeries& series, std::size_t p,
                               const EmConfig& config = {}) {
  config.validate();
  if (p == 0) throw std::invalid_argument("em_fit: order must be >= 1");
  if (series.size() < p + 2) {
    throw std::invalid_argument("em_fit: series too short for the order");
  }

  EmTheta theta;
  if (config.initial_theta) {
    theta = *config.initial_theta;
    if (theta.rho.size() != p) {
      throw std::invalid_argument("em_fit: initial theta has wrong order");
    }
  } else {
    theta.rho = detail::solve_yule_walker(series.values, p);
    const auto eps = detail::ar_residuals(series.values, theta.rho);
    double v = variance(eps);
    if (!(v > 0.0)) v = 1e-24;
    theta.delta = std::sqrt(v);
    theta.alpha = 1.0 / theta.delta;
    theta.mu = 0.0;
    theta.beta = 0.0;
  }

  std::vector<double> loglik_path;
  std::size_t iterations = 0;
  bool converged = false;

  EmState state;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    state = em_e_step(series, theta);
    loglik_path.push_back(state.loglik);
    EmTheta next = em_m_step(state, series, config);
    const double crit = detail::relative_change(theta, next);
    const bool extra_ok =
        config.symmetric_mode ||
        (std::abs(next.mu - theta.mu) < config.tolerance &&
         std::abs(next.beta - theta.beta) < config.tolerance);
    theta = std::move(next);
    iterations = it + 1;
    if (crit < config.tolerance && extra_ok) {
      converged = true;
      break;
    }
  }
  state = em_e_step(series, theta);
  loglik_path.push_back(state.loglik);
  return EstimationReport{FitMethod::kEm,
                          ArNigModel::unchecked(theta.rho, theta.innovation()),
                          iterations,
                          std::move(loglik_path),
                          converged,
                          TimeSeries(std::move(state.residuals))};
}

/// Yule-Walker baseline: coefficients from the empirical autocovariance
/// system, innovation law from the distribution-only EM on the residuals.
inline EstimationReport yw_fit(const TimeSeries& series, std::size_t p,
                               const EmConfig& config = {}) {
  if (p == 0) throw std::invalid_argument("yw_fit: order must be >= 1");
  if (series.size() < p + 2) {
    throw std::invalid_argument("yw_fit: series too short for the order");
  }
  return detail::report_from_baseline(
      FitMethod::kYw, series, detail::solve_yule_walker(series.values, p),
      config);
}

/// Conditional least squares baseline: coefficients by ordinary least squares
/// of y_t on its p lags, innovation law as in yw_fit.
inline EstimationReport cls_fit(const TimeSeries& series, std::size_t p,
                                const EmConfig& config = {}) {
  if (p == 0) throw std::invalid_argument("cls_fit: order must be >= 1");
  if (series.size() < p + 2) {
    throw std::invalid_argument("cls_fit: series too short for the order");
  }
  return detail::report_from_baseline(
      FitMethod::kCls, series, detail::solve_cls(series.values, p), config);
}

}  // namespace nigar
