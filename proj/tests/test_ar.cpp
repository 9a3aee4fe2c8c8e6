#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "nigar/ar.hpp"
#include "nigar/stats.hpp"

using namespace nigar;

TEST_CASE("stationarity checks") {
  {
    const auto chk = check_stationarity(std::vector<double>{0.5, 0.3});
    REQUIRE(chk.stationary);
    // roots of 1 - 0.5 z - 0.3 z^2 from the quadratic formula
    const double disc = std::sqrt(0.25 + 1.2);
    const double z1 = (-0.5 + disc) / 0.6;
    const double z2 = (-0.5 - disc) / 0.6;
    REQUIRE(chk.root_moduli[0] == Catch::Approx(std::abs(z1)).epsilon(1e-10));
    REQUIRE(chk.root_moduli[1] == Catch::Approx(std::abs(z2)).epsilon(1e-10));
    REQUIRE(chk.root_moduli[0] == Catch::Approx(1.1736).epsilon(1e-4));
    REQUIRE(chk.root_moduli[1] == Catch::Approx(2.8403).epsilon(1e-4));
  }
  {
    const auto chk = check_stationarity(std::vector<double>{1.0});  // unit root
    REQUIRE_FALSE(chk.stationary);
    REQUIRE(chk.root_moduli[0] == Catch::Approx(1.0));
  }
  {
    const auto chk = check_stationarity(std::vector<double>{0.9610});
    REQUIRE(chk.stationary);
    REQUIRE(chk.root_moduli[0] == Catch::Approx(1.0 / 0.9610).epsilon(1e-12));
  }
  REQUIRE_THROWS_AS(check_stationarity(std::vector<double>{}),
                    std::invalid_argument);

  REQUIRE_THROWS_AS(ArNigModel({1.2}, NigParams(1, 0, 0, 2)),
                    std::invalid_argument);
  const auto loose = ArNigModel::unchecked({1.2}, NigParams(1, 0, 0, 2));
  REQUIRE_FALSE(loose.stationary());
}

TEST_CASE("time series validation") {
  REQUIRE_THROWS_AS(TimeSeries(std::vector<double>{}), std::invalid_argument);
  REQUIRE_THROWS_AS(TimeSeries({1.0, std::nan("")}), std::invalid_argument);
  REQUIRE(TimeSeries({1.0, 2.0}, "x").size() == 2);
}

TEST_CASE("simulation moments") {
  const ArNigModel case1({0.5, 0.3}, NigParams(1, 0, 0, 2));
  {
    const auto ts = simulate(case1, 1000, 500, 42);
    REQUIRE(ts.size() == 1000);
    // long-run variance of the sample mean: sigma_eps^2 / (1 - sum rho)^2 / n
    const double se = std::sqrt(2.0 / (0.2 * 0.2) / 1000.0);
    REQUIRE(std::abs(mean(ts.values)) < 3.0 * se);
  }
  {
    // zero coefficient: iid innovations
    const ArNigModel iid({0.0}, NigParams(1, 0, 0, 2));
    const auto ts = simulate(iid, 100000, 100, 7);
    const double v = variance(ts.values);
    double m4 = 0.0;
    const double m = mean(ts.values);
    for (double x : ts.values) m4 += std::pow(x - m, 4);
    m4 /= ts.size();
    const double se_var = std::sqrt((m4 - v * v) / ts.size());
    REQUIRE(std::abs(v - 2.0) < 3.0 * se_var);
  }
  REQUIRE_THROWS_AS(
      simulate(ArNigModel::unchecked({1.05}, NigParams(1, 0, 0, 2)), 10, 0, 1),
      std::invalid_argument);

  // bit-identical replay under the same seed
  const auto a = simulate(case1, 256, 500, 123);
  const auto b = simulate(case1, 256, 500, 123);
  REQUIRE(a.values == b.values);
}

TEST_CASE("simulated autocovariances match theory") {
  const ArNigModel case1({0.5, 0.3}, NigParams(1, 0, 0, 2));
  const std::size_t n = 1000000;
  const auto ts = simulate(case1, n, 500, 2024);
  const auto theo = theoretical_moments(case1, 5);

  // Monte Carlo standard errors from batch means over 100 disjoint batches
  const std::size_t nb = 100, bl = n / nb;
  for (std::size_t lag = 0; lag <= 5; ++lag) {
    std::vector<double> batch(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::span<const double> seg(ts.values.data() + b * bl, bl);
      batch[b] = autocovariance(seg, lag)[lag];
    }
    const double est = mean(batch);
    const double se = std::sqrt(variance(batch) / nb);
    REQUIRE(std::abs(est - theo.lags[lag]) < 4.0 * se);
  }
}

TEST_CASE("conditional log density") {
  const auto innovation = NigParams(1, 0, 0, 2);
  {
    const auto m = ArNigModel::unchecked({0.0}, innovation);
    const std::vector<double> h{17.0};
    REQUIRE(conditional_log_density(1.3, h, m) ==
            Catch::Approx(nig_log_pdf(1.3, innovation)).epsilon(1e-14));
  }
  {
    const ArNigModel m({0.5, 0.3}, innovation);
    const std::vector<double> h{1.0, -2.0};  // rho^T h = -0.1
    const double lhs = conditional_log_density(0.7, h, m);
    const double rhs = nig_log_pdf(0.7 - (-0.1), innovation);
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));
    REQUIRE_THROWS_AS(conditional_log_density(0.7, std::vector<double>{1.0}, m),
                      std::invalid_argument);
  }
}

TEST_CASE("theoretical moments closed forms") {
  {
    const ArNigModel case1({0.5, 0.3}, NigParams(1, 0, 0, 2));
    const auto theo = theoretical_moments(case1, 3);
    REQUIRE(theo.sigma_eps2 == Catch::Approx(2.0));
    REQUIRE(theo.lags[0] == Catch::Approx(1.4 / 0.312).epsilon(1e-12));
    REQUIRE(theo.lags[0] ==
            Catch::Approx(ar2_stationary_variance(0.5, 0.3, 2.0)).epsilon(1e-12));
  }
  {
    const ArNigModel m({0.9610}, NigParams(0.0087, 0, 0, 70.3882));
    const auto theo = theoretical_moments(m, 1);
    const double s2 = 70.3882 / 0.0087;
    REQUIRE(theo.lags[0] ==
            Catch::Approx(s2 / (1.0 - 0.9610 * 0.9610)).epsilon(1e-10));
    REQUIRE(theo.lags[1] == Catch::Approx(0.9610 * theo.lags[0]).epsilon(1e-10));
  }
  {
    const ArNigModel m({0.3, 0.2, 0.1}, NigParams(1, 0, 0, 2));
    const auto theo = theoretical_moments(m, 0);
    REQUIRE(theo.lags[0] ==
            Catch::Approx(ar3_stationary_variance(0.3, 0.2, 0.1, 2.0))
                .epsilon(1e-10));
  }
}

TEST_CASE("closed forms agree with the linear solve on random draws") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  int done2 = 0, done3 = 0;
  while (done2 < 100) {
    const double r1 = u(gen), r2 = u(gen);
    if (!check_stationarity(std::vector<double>{r1, r2}).stationary) continue;
    const ArNigModel m({r1, r2}, NigParams(1, 0, 0, 2));
    const auto theo = theoretical_moments(m, 0);
    REQUIRE(theo.lags[0] ==
            Catch::Approx(ar2_stationary_variance(r1, r2, theo.sigma_eps2))
                .epsilon(1e-10));
    ++done2;
  }
  while (done3 < 100) {
    const double r1 = u(gen), r2 = u(gen), r3 = u(gen);
    if (!check_stationarity(std::vector<double>{r1, r2, r3}).stationary)
      continue;
    const ArNigModel m({r1, r2, r3}, NigParams(1, 0, 0, 2));
    const auto theo = theoretical_moments(m, 0);
    REQUIRE(theo.lags[0] ==
            Catch::Approx(ar3_stationary_variance(r1, r2, r3, theo.sigma_eps2))
                .epsilon(1e-10));
    ++done3;
  }
}

TEST_CASE("mean formula") {
  {
    const ArNigModel m({0.5}, NigParams(1, 0, 1, 2));
    REQUIRE(mean_formula(m) == Catch::Approx(2.0));
  }
  {
    const ArNigModel m({0.4, 0.2}, NigParams(1, 0, 0, 2));
    REQUIRE(mean_formula(m) == 0.0);
  }
  {
    const ArNigModel m({0.4}, NigParams(1, 0.2, 0.5, 2));
    const double expect =
        (0.5 + 2.0 * 0.2 / std::sqrt(1.0 - 0.04)) / 0.6;
    REQUIRE(mean_formula(m) == Catch::Approx(expect).epsilon(1e-12));
    const std::size_t n = 200000;
    const auto ts = simulate(m, n, 500, 31337);
    const double sigma_eps2 = nig_moments(m.innovation()).variance;
    const double se = std::sqrt(sigma_eps2 / (0.6 * 0.6) / n);
    REQUIRE(std::abs(mean(ts.values) - expect) < 3.0 * se);
  }
}
