#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "deeplr/errors.hpp"
#include "deeplr/stats.hpp"

using namespace deeplr;

TEST_CASE("oracle sanity") {
    CHECK(oracle::phi(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(oracle::phi(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-13));
    CHECK(static_cast<double>(oracle::erf_series(1.0L)) == doctest::Approx(std::erf(1.0)).epsilon(1e-15));
}

TEST_CASE("normal quantile") {
    CHECK(stats::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(stats::normal_quantile(0.975) - oracle::normal_quantile(0.975)) < 1e-9);
    CHECK(std::abs(stats::normal_quantile(0.975) - 1.959964) < 1e-5);
    CHECK(stats::normal_quantile(0.025) == doctest::Approx(-stats::normal_quantile(0.975)).epsilon(1e-14));
    for (double p : {1e-8, 1e-4, 0.01, 0.1, 0.3, 0.6, 0.9, 0.999, 1 - 1e-6}) {
        CAPTURE(p);
        CHECK(std::abs(stats::normal_quantile(p) - oracle::normal_quantile(p)) < 1e-9);
    }
    CHECK_THROWS_AS(stats::normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(stats::normal_quantile(1.0), DomainError);
    CHECK_THROWS_AS(stats::normal_quantile(-0.2), DomainError);
}

TEST_CASE("incomplete gamma closed forms") {
    for (double x : {0.0, 0.1, 1.0, 2.5, 7.0, 30.0}) {
        CAPTURE(x);
        CHECK(std::abs(stats::regularized_gamma_p(1.0, x) - (1.0 - std::exp(-x))) < 1e-12);
        // P(a+1, x) = P(a, x) - x^a e^-x / Gamma(a+1)
        const double a = 2.5;
        const double lhs = stats::regularized_gamma_p(a + 1.0, x);
        const double rhs = stats::regularized_gamma_p(a, x) - std::exp(a * std::log(x) - x - std::lgamma(a + 1.0));
        if (x > 0.0) CHECK(std::abs(lhs - rhs) < 1e-12);
    }
    CHECK_THROWS_AS(stats::regularized_gamma_p(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(stats::regularized_gamma_p(1.0, -1.0), DomainError);
}

TEST_CASE("chi-square cdf") {
    for (int k : {1, 2, 3, 7}) CHECK(stats::chi2_cdf(0.0, k) == 0.0);
    CHECK(std::abs(stats::chi2_cdf(-2.0 * std::log(0.05), 2) - 0.95) < 1e-9);
    CHECK(std::abs(stats::chi2_cdf(3.841459, 1) - 0.95) < 1e-5);
    for (int i = 0; i <= 400; ++i) {
        const double x = 0.05 * i;
        CAPTURE(x);
        CHECK(std::abs(stats::chi2_cdf(x, 1) - oracle::chi2_1_cdf(x)) < 1e-10);
        CHECK(std::abs(stats::chi2_cdf(x, 2) - oracle::chi2_2_cdf(x)) < 1e-10);
        CHECK(std::abs(stats::chi2_cdf(x, 3) - oracle::chi2_3_cdf(x)) < 1e-10);
    }
    CHECK_THROWS_AS(stats::chi2_cdf(-1.0, 1), DomainError);
    CHECK_THROWS_AS(stats::chi2_cdf(1.0, 0), DomainError);
}

TEST_CASE("cdfs are monotone") {
    for (int k : {1, 2, 5}) {
        double prev = 0.0;
        for (int i = 0; i <= 600; ++i) {
            const double v = stats::chi2_cdf(0.05 * i, k);
            CHECK(v >= prev);
            prev = v;
        }
    }
    double prev = 0.0;
    for (int i = -400; i <= 400; ++i) {
        const double v = stats::normal_cdf(0.02 * i);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("chi-square quantile") {
    CHECK(std::abs(stats::chi2_quantile(0.95, 2) - (-2.0 * std::log(0.05))) < 1e-8);
    const double z = stats::normal_quantile(0.975);
    CHECK(std::abs(stats::chi2_quantile(0.95, 1) - z * z) < 1e-8);
    for (double a : {0.5, 0.2, 0.1, 0.05, 0.01}) {
        CHECK(std::abs(stats::chi2_quantile(1.0 - a, 2) - (-2.0 * std::log(a))) < 1e-8);
    }
    for (int k : {1, 2}) {
        for (double p : {0.5, 0.9, 0.99}) {
            CHECK(std::abs(stats::chi2_cdf(stats::chi2_quantile(p, k), k) - p) < 1e-8);
        }
    }
    CHECK_THROWS_AS(stats::chi2_quantile(1.0, 1), DomainError);
    CHECK_THROWS_AS(stats::chi2_quantile(0.5, 0), DomainError);
}

TEST_CASE("gaussian mean interval") {
    const std::vector<double> s{1.0, 2.0, 3.0};
    const auto r = stats::gaussian_mean_lr_interval(s, 0.05);
    CHECK(std::abs(r.lo - 0.86837) < 1e-4);
    CHECK(std::abs(r.hi - 3.13163) < 1e-4);
    CHECK(r.level == doctest::Approx(0.95));

    std::vector<double> shifted = s;
    for (double& v : shifted) v += 12.5;
    const auto r2 = stats::gaussian_mean_lr_interval(shifted, 0.05);
    CHECK(std::abs(r2.lo - (r.lo + 12.5)) < 1e-12);
    CHECK(std::abs(r2.hi - (r.hi + 12.5)) < 1e-12);

    const std::vector<double> same{4.0, 4.0, 4.0};
    CHECK_THROWS_AS(stats::gaussian_mean_lr_interval(same, 0.05), DegenerateDataError);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(stats::gaussian_mean_lr_interval(one, 0.05), DegenerateDataError);
}

TEST_CASE("gaussian mean interval contains the mean") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(1.0, 2.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> s(5 + rep);
        for (double& v : s) v = nd(rng);
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        const auto r = stats::gaussian_mean_lr_interval(s, 0.1);
        CHECK(r.lo <= mean);
        CHECK(mean <= r.hi);
    }
}

TEST_CASE("ks distance") {
    const std::vector<double> zero{0.0};
    CHECK(stats::ks_distance(zero, stats::normal_cdf) == doctest::Approx(0.5));

    const int n = 200;
    std::vector<double> at_quantiles;
    for (int i = 1; i <= n; ++i) at_quantiles.push_back(oracle::normal_quantile(i / (n + 1.0)));
    CHECK(stats::ks_distance(at_quantiles, stats::normal_cdf) <= 1.0 / n);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    std::vector<double> sq(10000);
    for (double& v : sq) {
        const double z = nd(rng);
        v = z * z;
    }
    CHECK(stats::ks_distance(sq, [](double x) { return stats::chi2_cdf(x, 1); }) < 0.02);

    const std::vector<double> none;
    CHECK_THROWS_AS(stats::ks_distance(none, stats::normal_cdf), DomainError);
}
