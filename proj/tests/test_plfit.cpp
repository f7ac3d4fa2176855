// Copyright 2026 The swa Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "swa/error.hpp"
#include "swa/plfit.hpp"

using namespace swa;

TEST_CASE("mle_alpha") {
  const std::vector<double> tail = {1, 2, 4, 8};
  SUBCASE("closed form agrees with the likelihood grid search") {
    const double a = mle_alpha(tail, 1.0);
    CHECK(a == doctest::Approx(1.0 + 4.0 / (6.0 * std::log(2.0))).epsilon(1e-14));
    CHECK(a == doctest::Approx(1.9618).epsilon(1e-4));
    CHECK(std::abs(a - oracle::grid_search_alpha(tail, 1.0)) <= 1e-3);
  }
  SUBCASE("recovers the generator exponent on quantile samples") {
    CHECK(std::abs(mle_alpha(oracle::pl_quantiles(3.0, 1.0, 1000), 1.0) - 3.0) <= 0.02);
  }
  SUBCASE("scale free") {
    const double base = mle_alpha(tail, 1.0);
    std::vector<double> scaled;
    for (double x : tail) scaled.push_back(4.0 * x);
    CHECK(mle_alpha(scaled, 4.0) == base);
    for (auto& x : scaled) x = x / 4.0 * 1.7;
    CHECK(mle_alpha(scaled, 1.7) == doctest::Approx(base).epsilon(1e-13));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(mle_alpha(std::vector<double>{2, 2, 2}, 2.0), Error);
    try {
      mle_alpha(std::vector<double>{2, 2}, 2.0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateTail);
    }
    CHECK_THROWS_AS(mle_alpha(std::vector<double>{1, 2}, 1.5), Error);
    CHECK_THROWS_AS(mle_alpha(std::vector<double>{1}, 1.0), Error);
  }
}

TEST_CASE("mle_alpha matches the likelihood maximizer on random tails") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> alpha_d(1.8, 4.5), u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = alpha_d(rng), x_min = 0.5 + u(rng);
    std::vector<double> tail;
    for (int i = 0; i < 200; ++i) tail.push_back(x_min * std::pow(1.0 - u(rng), -1.0 / (alpha - 1.0)));
    const double mle = mle_alpha(tail, x_min);
    CHECK(std::abs(mle - oracle::grid_search_alpha(tail, x_min)) <= 1e-3);
  }
}

TEST_CASE("ks_distance") {
  SUBCASE("single point at x_min") {
    CHECK(ks_distance(std::vector<double>{3.0}, 3.0, 2.5) == 1.0);
  }
  SUBCASE("points at the fitted quantiles") {
    const double alpha = 2.7, x_min = 1.3;
    const int n = 200;
    std::vector<double> tail;
    for (int i = 1; i <= n; ++i) {
      const double p = i == n ? 1.0 - 1e-13 : static_cast<double>(i) / n;
      tail.push_back(x_min * std::pow(1.0 - p, -1.0 / (alpha - 1.0)));
    }
    CHECK(ks_distance(tail, x_min, alpha) <= 1e-12);
  }
  SUBCASE("agrees with direct evaluation") {
    const std::vector<double> tail = {1, 2, 4, 8};
    const double alpha = 1.9618;
    const double d = ks_distance(tail, 1.0, alpha);
    CHECK(d == doctest::Approx(oracle::direct_ks(tail, 1.0, alpha)).epsilon(1e-13));
    // 1/4 - 0 at the first point dominates: CDF(2) = 1 - 2^-0.9618 = 0.4871.
    CHECK(d == doctest::Approx(0.25).epsilon(1e-13));
  }
  SUBCASE("recomputation after dropping the largest point") {
    std::vector<double> tail = oracle::pl_quantiles(2.2, 1.0, 50);
    const double full = ks_distance(tail, 1.0, 2.2);
    CHECK(full == ks_distance(tail, 1.0, 2.2));
    tail.pop_back();
    CHECK(ks_distance(tail, 1.0, 2.2) == doctest::Approx(oracle::direct_ks(tail, 1.0, 2.2)).epsilon(1e-12));
  }
}

TEST_CASE("fit_power_law on synthetic spectra") {
  SUBCASE("pure power law") {
    const auto ev = oracle::pl_quantiles(2.5, 1.0, 1000);
    const auto fit = fit_power_law(std::span<const double>(ev));
    CHECK(fit.alpha >= 2.4);
    CHECK(fit.alpha <= 2.6);
    CHECK(fit.lambda_min <= 1.2);
    CHECK(fit.lambda_max == ev.back());
    CHECK(fit.flags.ok());
    CHECK(std::find(ev.begin(), ev.end(), fit.lambda_min) != ev.end());
  }
  SUBCASE("uniform bulk plus power-law tail") {
    const auto ev = oracle::bulk_plus_tail(3.0, 1.0, 500, 500, 1.0);
    const auto fit = fit_power_law(std::span<const double>(ev));
    CHECK(fit.lambda_min >= 0.67);
    CHECK(fit.lambda_min <= 1.5);
    CHECK(fit.alpha >= 2.8);
    CHECK(fit.alpha <= 3.2);
  }
  SUBCASE("scale invariance") {
    const auto ev = oracle::bulk_plus_tail(3.0, 1.0, 300, 300, 1.0);
    std::vector<double> scaled;
    for (double v : ev) scaled.push_back(100.0 * v);
    const auto a = fit_power_law(std::span<const double>(ev));
    const auto b = fit_power_law(std::span<const double>(scaled));
    CHECK(std::abs(a.alpha - b.alpha) <= 1e-9);
    CHECK(b.lambda_min == doctest::Approx(100.0 * a.lambda_min).epsilon(1e-14));
    CHECK(b.lambda_max == doctest::Approx(100.0 * a.lambda_max).epsilon(1e-14));
  }
  SUBCASE("known exponents are recovered") {
    for (double alpha : {2.0, 2.5, 3.0, 4.0}) {
      const auto ev = oracle::pl_quantiles(alpha, 1.0, 1000);
      CHECK(std::abs(mle_alpha(ev, 1.0) - alpha) <= 0.05);
      CHECK(std::abs(fit_power_law(std::span<const double>(ev)).alpha - alpha) <= 0.2);
    }
  }
  SUBCASE("the chosen candidate minimizes the K-S distance") {
    const auto ev = oracle::bulk_plus_tail(2.5, 1.0, 100, 100, 1.0);
    const auto fit = fit_power_law(std::span<const double>(ev));
    for (std::size_t j = 0; j + 5 <= ev.size(); ++j) {
      if (j > 0 && ev[j] == ev[j - 1]) continue;
      std::vector<double> tail(ev.begin() + static_cast<long>(j), ev.end());
      const double a = mle_alpha(tail, ev[j]);
      CHECK(oracle::direct_ks(tail, ev[j], a) >= fit.ks_distance - 1e-12);
    }
  }
}

TEST_CASE("fit_power_law flags, ties and errors") {
  SUBCASE("large exponent") {
    const auto ev = oracle::pl_quantiles(8.0, 1.0, 400);
    CHECK(fit_power_law(std::span<const double>(ev)).flags.has(FitFlag::AlphaOver6));
  }
  SUBCASE("small exponent") {
    const auto ev = oracle::pl_quantiles(1.3, 1.0, 400);
    const auto fit = fit_power_law(std::span<const double>(ev));
    CHECK(fit.flags.has(FitFlag::AlphaBelow1_5));
    CHECK(fit.flags.to_string().find("ALPHA_BELOW_1_5") != std::string::npos);
  }
  SUBCASE("short tail") {
    const std::vector<double> ev = {1, 1.5, 2.2, 3.1, 4.9, 7.0, 11.0, 16.0};
    const auto fit = fit_power_law(std::span<const double>(ev));
    CHECK(fit.n_tail >= 5);
    CHECK(fit.n_tail < 20);
    CHECK(fit.flags.has(FitFlag::ShortTail));
  }
  SUBCASE("repeated values count fully in the tail") {
    // x_min = 1 (tail of 8, D = 3/8) loses to x_min = 2 (tail of 5, D = 0.2).
    const std::vector<double> ev = {1, 1, 1, 2, 4, 8, 16, 32};
    const auto fit = fit_power_law(std::span<const double>(ev));
    CHECK(fit.lambda_min == 2.0);
    CHECK(fit.n_tail == 5);
    CHECK(fit.alpha == doctest::Approx(1.0 + 5.0 / (10.0 * std::log(2.0))).epsilon(1e-14));
    CHECK(fit.ks_distance == doctest::Approx(0.2).epsilon(1e-14));
  }
  SUBCASE("too few eigenvalues") {
    try {
      fit_power_law(std::span<const double>(std::vector<double>{1, 2, 3}));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewEigenvalues);
    }
  }
  SUBCASE("constant spectrum") {
    try {
      fit_power_law(std::span<const double>(std::vector<double>(10, 2.0)));
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateTail);
    }
  }
}

TEST_CASE("parallel scan is bit-identical to the serial reference") {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(0.0, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> ev(700);
    for (auto& v : ev) v = ln(rng);
    std::sort(ev.begin(), ev.end());
    const auto ref = fit_power_law_serial(ev);
    for (int jobs : {1, 2, 4, 8}) {
      PLFitOptions opts;
      opts.jobs = jobs;
      CHECK(fit_power_law(std::span<const double>(ev), opts) == ref);
    }
  }
}
