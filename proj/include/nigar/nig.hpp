#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nigar/bessel.hpp"
#include "nigar/rng.hpp"

namespace nigar {

/// Parameters of the normal inverse Gaussian law NIG(alpha, beta, mu, delta).
///
/// alpha steers the tails, beta the asymmetry, mu the location and delta the
/// scale. gamma = sqrt(alpha^2 - beta^2) is always derived, never stored.
/// |beta| = alpha is rejected: every moment formula and the IG mixing law
/// divide by gamma.
class NigParams {
 public:
  NigParams(double alpha, double beta, double mu, double delta)
      : alpha_(alpha), beta_(beta), mu_(mu), delta_(delta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(mu) ||
        !std::isfinite(delta)) {
      throw std::invalid_argument("NigParams: non-finite parameter");
    }
    if (!(alpha > 0.0)) {
      throw std::invalid_argument("NigParams: alpha must be positive");
    }
    if (!(std::abs(beta) < alpha)) {
      throw std::invalid_argument(
          "NigParams: |beta| must be strictly less than alpha");
    }
    if (!(delta > 0.0)) {
      throw std::invalid_argument("NigParams: delta must be positive");
    }
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double mu() const { return mu_; }
  double delta() const { return delta_; }
  double gamma() const {
    return std::sqrt((alpha_ - beta_) * (alpha_ + beta_));
  }

  /// phi(x) = 1 + ((x - mu)/delta)^2, the quadratic inside the NIG kernel.
  double phi(double x) const {
    const double z = (x - mu_) / delta_;
    return 1.0 + z * z;
  }

 private:
  double alpha_, beta_, mu_, delta_;
};

/// Inverse Gaussian parameters (gamma, delta), the mixing law of the NIG
/// variance-mean mixture. mu1 = delta/gamma and lambda1 = delta^2 are the
/// mean/shape parametrization the sampler works in.
class IgParams {
 public:
  IgParams(double gamma, double delta) : gamma_(gamma), delta_(delta) {
    if (!std::isfinite(gamma) || !std::isfinite(delta) || !(gamma > 0.0) ||
        !(delta > 0.0)) {
      throw std::invalid_argument("IgParams: gamma and delta must be positive");
    }
  }

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  double mu1() const { return delta_ / gamma_; }
  double lambda1() const { return delta_ * delta_; }

 private:
  double gamma_, delta_;
};

struct NigMoments {
  double mean;
  double variance;
  double skewness;
  double kurtosis;  // excess kurtosis, 3(1 + 4 beta^2/alpha^2)/(delta gamma)
};

inline NigMoments nig_moments(const NigParams& p) {
  const double g = p.gamma();
  NigMoments m{};
  m.mean = p.mu() + p.delta() * p.beta() / g;
  m.variance = p.delta() * p.alpha() * p.alpha() / (g * g * g);
  m.skewness = 3.0 * p.beta() / (p.alpha() * std::sqrt(p.delta() * g));
  const double br = p.beta() / p.alpha();
  m.kurtosis = 3.0 * (1.0 + 4.0 * br * br) / (p.delta() * g);
  return m;
}

inline double nig_log_pdf(double x, const NigParams& p) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("nig_log_pdf: non-finite x");
  }
  const double phi = p.phi(x);
  const double arg = p.delta() * p.alpha() * std::sqrt(phi);
  return std::log(p.alpha() / detail::kPi) + p.delta() * p.gamma() -
         p.beta() * p.mu() - 0.5 * std::log(phi) + log_bessel_k(1.0, arg) +
         p.beta() * x;
}

inline double nig_pdf(double x, const NigParams& p) {
  return std::exp(nig_log_pdf(x, p));
}

inline double ig_pdf(double x, const IgParams& p) {
  if (!(x > 0.0)) {
    throw std::invalid_argument("ig_pdf: x must be positive");
  }
  const double d = p.delta(), g = p.gamma();
  return d / std::sqrt(2.0 * detail::kPi) * std::exp(d * g) *
         std::pow(x, -1.5) *
         std::exp(-0.5 * (d * d / x + g * g * x));
}

/// One IG(gamma, delta) draw via the transformation/rejection algorithm:
///   1. Z standard normal, Y = Z^2
///   2. X1 = mu1 + mu1^2 Y/(2 lambda1) - mu1/(2 lambda1) sqrt(4 mu1 lambda1 Y + mu1^2 Y^2)
///   3. U uniform on [0, 1)
///   4. G = X1 if U <= mu1/(mu1 + X1), else mu1^2/X1
inline double sample_ig_one(const IgParams& p, Rng& rng) {
  const double mu1 = p.mu1();
  const double lam1 = p.lambda1();
  const double z = rng.normal();
  const double y = z * z;
  const double x1 = mu1 + mu1 * mu1 * y / (2.0 * lam1) -
                    mu1 / (2.0 * lam1) *
                        std::sqrt(4.0 * mu1 * lam1 * y + mu1 * mu1 * y * y);
  const double u = rng.uniform();
  return u <= mu1 / (mu1 + x1) ? x1 : mu1 * mu1 / x1;
}

inline std::vector<double> sample_ig(const IgParams& p, std::size_t n,
                                     std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_ig: n must be >= 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = sample_ig_one(p, rng);
  return out;
}

/// One NIG draw through the variance-mean mixture X = mu + beta G + sqrt(G) Z.
inline double sample_nig_one(const NigParams& p, Rng& rng) {
  const double g = sample_ig_one(IgParams(p.gamma(), p.delta()), rng);
  return p.mu() + p.beta() * g + std::sqrt(g) * rng.normal();
}

inline std::vector<double> sample_nig(const NigParams& p, std::size_t n,
                                      std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_nig: n must be >= 1");
  Rng rng(seed);
  const IgParams ig(p.gamma(), p.delta());
  std::vector<double> out(n);
  for (auto& v : out) {
    const double g = sample_ig_one(ig, rng);
    v = p.mu() + p.beta() * g + std::sqrt(g) * rng.normal();
  }
  return out;
}

/// Posterior of the latent mixing variable G given an observed innovation:
/// GIG(-1, delta sqrt(phi(eps)), alpha).
struct GigPosterior {
  static constexpr double order = -1.0;
  double chi;
  double psi;
};

inline GigPosterior gig_posterior(double epsilon, const NigParams& p) {
  return {p.delta() * std::sqrt(p.phi(epsilon)), p.alpha()};
}

struct GigMoments {
  double s;  // E(G | eps)
  double w;  // E(G^{-1} | eps)
};

/// Conditional first and inverse-first moments of the mixing variable,
///   E(G|eps)      = (delta sqrt(phi)/alpha) K_0(a)/K_1(a)
///   E(G^{-1}|eps) = (alpha/(delta sqrt(phi))) K_{-2}(a)/K_{-1}(a)
/// with a = alpha delta sqrt(phi(eps)); K_{-nu} = K_nu collapses both ratios
/// onto orders 0/1/2 at the common argument.
inline GigMoments gig_posterior_moments(double epsilon, const NigParams& p) {
  const double root_phi = std::sqrt(p.phi(epsilon));
  const double arg = p.alpha() * p.delta() * root_phi;
  const auto r = bessel_k01_ratios(arg);
  const double scale = p.delta() * root_phi / p.alpha();
  return {scale * r.k0_over_k1, r.k2_over_k1 / scale};
}

// Closure properties of the NIG family.

inline NigParams nig_shift(const NigParams& p, double c) {
  return {p.alpha(), p.beta(), p.mu() + c, p.delta()};
}

inline NigParams nig_scale(const NigParams& p, double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("nig_scale: c must be positive");
  }
  return {p.alpha() / c, p.beta() / c, c * p.mu(), c * p.delta()};
}

inline NigParams nig_convolve(const NigParams& a, const NigParams& b) {
  if (a.alpha() != b.alpha() || a.beta() != b.beta()) {
    throw std::invalid_argument(
        "nig_convolve: summands must share (alpha, beta)");
  }
  return {a.alpha(), a.beta(), a.mu() + b.mu(), a.delta() + b.delta()};
}

inline NigParams nig_standardize(const NigParams& p) {
  return {p.alpha() * p.delta(), p.beta() * p.delta(), 0.0, 1.0};
}

namespace detail {

inline double simpson_rec(double (*f)(double, const NigParams&),
                          const NigParams& p, double a, double fa, double b,
                          double fb, double m, double fm, double whole,
                          double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm, p), frm = f(rm, p);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, p, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, p, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

inline double integrate_pdf(const NigParams& p, double a, double b,
                            double tol) {
  const auto f = +[](double x, const NigParams& q) { return nig_pdf(x, q); };
  const double fa = f(a, p), fb = f(b, p), m = 0.5 * (a + b), fm = f(m, p);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, p, a, fa, b, fb, m, fm, whole, tol, 48);
}

}  // namespace detail

/// Numerical CDF of a NIG law, by adaptive quadrature of the density with a
/// cached normalization. There is no closed form.
class NigCdf {
 public:
  explicit NigCdf(const NigParams& p) : p_(p) {
    const NigMoments m = nig_moments(p);
    center_ = m.mean;
    sd_ = std::sqrt(m.variance);
    // widen until both tail masses are negligible
    double k = 8.0;
    while (nig_pdf(center_ - k * sd_, p_) * sd_ > 1e-15 ||
           nig_pdf(center_ + k * sd_, p_) * sd_ > 1e-15) {
      k *= 1.5;
      if (k > 1e5) break;
    }
    lo_ = center_ - k * sd_;
    hi_ = center_ + k * sd_;
    left_of_center_ = detail::integrate_pdf(p_, lo_, center_, 1e-12);
    norm_ = left_of_center_ + detail::integrate_pdf(p_, center_, hi_, 1e-12);
  }

  double operator()(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    if (x <= center_) {
      return detail::integrate_pdf(p_, lo_, x, 1e-12) / norm_;
    }
    return (left_of_center_ +
            detail::integrate_pdf(p_, center_, x, 1e-12)) /
           norm_;
  }

  /// CDF at every point of an ascending sequence, integrating gap by gap.
  std::vector<double> eval_sorted(std::span<const double> sorted_x) const {
    std::vector<double> out(sorted_x.size());
    if (sorted_x.empty()) return out;
    double acc = (*this)(sorted_x.front());
    out[0] = acc;
    for (std::size_t i = 1; i < sorted_x.size(); ++i) {
      const double a = std::max(sorted_x[i - 1], lo_);
      const double b = std::min(std::max(sorted_x[i], lo_), hi_);
      if (b > a) acc += detail::integrate_pdf(p_, a, b, 1e-13) / norm_;
      out[i] = std::min(acc, 1.0);
    }
    return out;
  }

  /// Quantile by bisection on the numerical CDF.
  double invert(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
      throw std::invalid_argument("NigCdf::invert: u must be in (0, 1)");
    }
    double a = lo_, b = hi_;
    for (int i = 0; i < 200 && (b - a) > 1e-12 * sd_; ++i) {
      const double m = 0.5 * (a + b);
      ((*this)(m) < u ? a : b) = m;
    }
    return 0.5 * (a + b);
  }

 private:
  NigParams p_;
  double center_, sd_, lo_, hi_;
  double left_of_center_, norm_;
};

}  // namespace nigar
