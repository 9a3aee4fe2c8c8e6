#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nigar/bessel.hpp"
#include "support/oracles.hpp"

using nigar::bessel_k;
using nigar::bessel_k01_ratios;
using nigar::bessel_k_ratio;
using nigar::log_bessel_k;

TEST_CASE("half-integer closed forms") {
  // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
  const double k = bessel_k(0.5, 1.0);
  const double exact = std::sqrt(oracle::kPi / 2.0) * std::exp(-1.0);
  REQUIRE(k == Catch::Approx(exact).epsilon(1e-12));
  REQUIRE(exact == Catch::Approx(0.461068504).epsilon(1e-9));

  const double lk = log_bessel_k(0.5, 10.0);
  const double lexact = std::log(std::sqrt(oracle::kPi / 20.0)) - 10.0;
  REQUIRE(lk == Catch::Approx(lexact).epsilon(1e-12));
}

TEST_CASE("agreement with the integral-definition oracle") {
  for (double nu : {0.0, 0.5, 1.0, 2.0}) {
    for (double x : {0.1, 1.0, 2.0, 10.0}) {
      const double ref = std::exp(oracle::log_bessel_k_integral(nu, x));
      REQUIRE(bessel_k(nu, x) == Catch::Approx(ref).epsilon(1e-8));
    }
  }
  const double lref = oracle::log_bessel_k_integral(1.0, 1.0);
  REQUIRE(log_bessel_k(1.0, 1.0) == Catch::Approx(lref).epsilon(1e-10));
}

TEST_CASE("order symmetry is exact") {
  REQUIRE(bessel_k(-1.0, 2.0) == bessel_k(1.0, 2.0));
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> unu(-4.0, 4.0);
  std::uniform_real_distribution<double> ux(1e-3, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double nu = unu(gen);
    const double x = ux(gen);
    const double a = bessel_k(nu, x);
    const double b = bessel_k(-nu, x);
    REQUIRE(std::abs(a - b) <= 1e-12 * std::abs(a));
  }
}

TEST_CASE("three-term recurrence") {
  // K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x)
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unu(-4.0, 4.0);
  std::uniform_real_distribution<double> ux(1e-3, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double nu = unu(gen);
    const double x = ux(gen);
    const double lhs = bessel_k(nu + 1.0, x);
    const double rhs = bessel_k(nu - 1.0, x) + (2.0 * nu / x) * bessel_k(nu, x);
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("strictly decreasing in the argument") {
  for (double nu : {0.0, 0.5, 1.0, 2.0, 3.7}) {
    double prev = log_bessel_k(nu, 1e-3);
    for (double x = 2e-3; x < 120.0; x *= 1.37) {
      const double cur = log_bessel_k(nu, x);
      REQUIRE(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("log form stays finite deep into the exponential tail") {
  const double lk = log_bessel_k(1.0, 800.0);
  REQUIRE(std::isfinite(lk));
  const double ref = oracle::log_bessel_k_asymptotic(1.0, 800.0);
  REQUIRE(lk == Catch::Approx(ref).epsilon(1e-8));
  // K itself underflows there
  REQUIRE(bessel_k(1.0, 800.0) == 0.0);
}

TEST_CASE("ratios") {
  const double ref =
      std::exp(oracle::log_bessel_k_integral(0.0, 1.0) -
               oracle::log_bessel_k_integral(1.0, 1.0));
  REQUIRE(bessel_k_ratio(0.0, 1.0, 1.0) == Catch::Approx(ref).epsilon(1e-9));
  REQUIRE(bessel_k_ratio(-2.0, -1.0, 5.0) == bessel_k_ratio(2.0, 1.0, 5.0));
  REQUIRE(bessel_k_ratio(1.0, 1.0, 3.7) == 1.0);
  // both K's underflow at x = 900 but the ratio is O(1)
  const double r = bessel_k_ratio(0.0, 1.0, 900.0);
  REQUIRE(std::isfinite(r));
  REQUIRE(r < 1.0);
  REQUIRE(std::abs(bessel_k_ratio(0.0, 1.0, 1e4) - 1.0) < 1e-4);
}

TEST_CASE("fused 0/1/2 evaluation matches the generic path") {
  for (double x : {0.05, 0.7, 2.0, 9.0, 300.0}) {
    const auto r = bessel_k01_ratios(x);
    REQUIRE(r.k0_over_k1 ==
            Catch::Approx(bessel_k_ratio(0.0, 1.0, x)).epsilon(1e-12));
    REQUIRE(r.k2_over_k1 ==
            Catch::Approx(bessel_k_ratio(2.0, 1.0, x)).epsilon(1e-12));
    REQUIRE(nigar::bessel_k012(x).log_k1 ==
            Catch::Approx(log_bessel_k(1.0, x)).epsilon(1e-12));
  }
}

TEST_CASE("domain errors") {
  REQUIRE_THROWS_AS(bessel_k(1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(bessel_k(1.0, -3.0), std::invalid_argument);
  REQUIRE_THROWS_AS(log_bessel_k(std::nan(""), 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(bessel_k_ratio(0.0, 1.0, -1.0), std::invalid_argument);
}
