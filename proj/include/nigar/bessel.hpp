#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nigar {

namespace detail {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Leading coefficients of 1/Gamma(1+x) = sum c_k x^k, used for the small-mu
// limits of Temme's gamma combinations.
constexpr double kInvGammaC1 = 0.5772156649015328606;
constexpr double kInvGammaC3 = -0.0420026350340952355;
constexpr double kInvGammaC5 = -0.0421977345555443367;

struct TemmeGammas {
  double gam1;   // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
  double gam2;   // (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

inline TemmeGammas temme_gammas(double mu) {
  TemmeGammas g{};
  g.gampl = 1.0 / std::tgamma(1.0 + mu);
  g.gammi = 1.0 / std::tgamma(1.0 - mu);
  if (std::abs(mu) < 1e-3) {
    const double mu2 = mu * mu;
    g.gam1 = -(kInvGammaC1 + mu2 * (kInvGammaC3 + mu2 * kInvGammaC5));
  } else {
    g.gam1 = (g.gammi - g.gampl) / (2.0 * mu);
  }
  g.gam2 = 0.5 * (g.gammi + g.gampl);
  return g;
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2 and 0 < x <= 2, by Temme's series.
// Returns unscaled values (no underflow risk for x <= 2).
inline void bessel_k_temme(double mu, double x, double& kmu, double& kmup1) {
  constexpr int kMaxIter = 300;
  const double eps = std::numeric_limits<double>::epsilon();

  const double x2 = 0.5 * x;
  const double pimu = kPi * mu;
  const double fact =
      (std::abs(pimu) < 1e-12) ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(x2);
  double e = mu * d;
  const double fact2 = (std::abs(e) < 1e-12) ? 1.0 : std::sinh(e) / e;
  const TemmeGammas g = temme_gammas(mu);

  double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / g.gampl;
  double q = 0.5 / (e * g.gammi);
  double c = 1.0;
  d = x2 * x2;
  double sum1 = p;
  int i = 1;
  for (; i <= kMaxIter; ++i) {
    ff = (i * ff + p + q) / (i * i - mu * mu);
    c *= d / i;
    p /= (i - mu);
    q /= (i + mu);
    const double del = c * ff;
    sum += del;
    const double del1 = c * (p - i * ff);
    sum1 += del1;
    if (std::abs(del) < std::abs(sum) * eps) break;
  }
  kmu = sum;
  kmup1 = sum1 * 2.0 / x;
}

// Scaled e^x K_mu(x) and e^x K_{mu+1}(x) for |mu| <= 1/2 and x > 2, by the
// Thompson–Barnett continued fraction (CF2) plus its series for the
// normalizing sum.
inline void bessel_k_cf2_scaled(double mu, double x, double& kmu,
                                double& kmup1) {
  constexpr int kMaxIter = 10000;
  const double eps = std::numeric_limits<double>::epsilon();

  const double mu2 = mu * mu;
  const double a1 = 0.25 - mu2;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double delh = d;
  double h = delh;
  double q1 = 0.0;
  double q2 = 1.0;
  double a = -a1;
  double c = a1;
  double q = c;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIter; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  h = a1 * h;
  kmu = std::sqrt(kPi / (2.0 * x)) / s;
  kmup1 = kmu * (mu + x + 0.5 - h) / x;
}

// log K_nu(x) for nu >= 0, plus log K_{nu+1}(x) through the same reduction.
// Evaluates at the fractional order mu in [-1/2, 1/2] and recurs upward;
// the recurrence has only positive terms, so it is stable.
inline void log_bessel_k_pair(double nu, double x, double& log_knu,
                              double& log_knup1) {
  const int n = static_cast<int>(nu + 0.5);
  const double mu = nu - n;
  double kmu, kmup1;
  double log_scale;  // log of the factor by which values are scaled down
  if (x <= 2.0) {
    bessel_k_temme(mu, x, kmu, kmup1);
    log_scale = 0.0;
  } else {
    bessel_k_cf2_scaled(mu, x, kmu, kmup1);
    log_scale = -x;  // stored values are e^x K
  }
  const double two_over_x = 2.0 / x;
  for (int j = 0; j < n; ++j) {
    const double knext = kmu + (mu + j + 1) * two_over_x * kmup1;
    kmu = kmup1;
    kmup1 = knext;
    // Rescale if the upward recurrence approaches overflow (tiny x, large nu).
    if (kmup1 > 1e280) {
      const double f = 1e-280;
      kmu *= f;
      kmup1 *= f;
      log_scale += std::log(1e280);
    }
  }
  log_knu = std::log(kmu) + log_scale;
  log_knup1 = std::log(kmup1) + log_scale;
}

inline void check_bessel_args(double order, double x) {
  if (!std::isfinite(order) || !std::isfinite(x)) {
    throw std::invalid_argument("bessel_k: non-finite order or argument");
  }
  if (x <= 0.0) {
    throw std::invalid_argument("bessel_k: argument must be positive, got " +
                                std::to_string(x));
  }
}

}  // namespace detail

/// log K_nu(x), the canonical primitive. Stays finite far beyond the point
/// where K_nu itself underflows (x in the hundreds), which the NIG
/// log-likelihood requires.
inline double log_bessel_k(double order, double x) {
  detail::check_bessel_args(order, x);
  const double nu = std::abs(order);  // K_{-nu} = K_nu
  double lk, lkp1;
  detail::log_bessel_k_pair(nu, x, lk, lkp1);
  return lk;
}

/// Modified Bessel function of the third kind K_nu(x).
/// Underflows to 0 for x beyond ~745; use log_bessel_k there.
inline double bessel_k(double order, double x) {
  return std::exp(log_bessel_k(order, x));
}

/// K_{nu1}(x) / K_{nu2}(x) without intermediate under/overflow.
inline double bessel_k_ratio(double order_num, double order_den, double x) {
  detail::check_bessel_args(order_num, x);
  detail::check_bessel_args(order_den, x);
  const double n1 = std::abs(order_num);
  const double n2 = std::abs(order_den);
  if (n1 == n2) return 1.0;
  return std::exp(log_bessel_k(n1, x) - log_bessel_k(n2, x));
}

/// K_0, K_1, K_2 at a common argument from a single series/continued-fraction
/// evaluation: the ratios the GIG posterior moments need plus log K_1 for the
/// log-likelihood. K_2 follows from the recurrence K_2 = K_0 + (2/x) K_1.
struct BesselK012 {
  double k0_over_k1;
  double k2_over_k1;
  double log_k1;
};

inline BesselK012 bessel_k012(double x) {
  detail::check_bessel_args(0.0, x);
  double k0, k1;
  double log_scale = 0.0;
  if (x <= 2.0) {
    detail::bessel_k_temme(0.0, x, k0, k1);
  } else {
    detail::bessel_k_cf2_scaled(0.0, x, k0, k1);
    log_scale = -x;
  }
  const double r01 = k0 / k1;
  return {r01, r01 + 2.0 / x, std::log(k1) + log_scale};
}

struct BesselK01Ratios {
  double k0_over_k1;
  double k2_over_k1;
};

inline BesselK01Ratios bessel_k01_ratios(double x) {
  const auto r = bessel_k012(x);
  return {r.k0_over_k1, r.k2_over_k1};
}

}  // namespace nigar
