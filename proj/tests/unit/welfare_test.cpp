#include "hwd/error.hpp"
#include "hwd/welfare.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hwd;

namespace {

std::vector<double> lognormal_sample(std::uint64_t seed, std::size_t n, double mu = 0.0, double sigma = 0.5) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> law(mu, sigma);
    std::vector<double> out(n);
    for (auto& v : out) v = law(rng);
    return out;
}

WeightedSample with_weights(std::vector<double> values, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> w(0.2, 2.0);
    WeightedSample s = WeightedSample::unweighted(std::move(values));
    double sum = 0.0;
    for (auto& v : s.weights) sum += (v = w(rng));
    for (auto& v : s.weights) v *= static_cast<double>(s.size()) / sum;
    return s;
}

} // namespace

TEST_CASE("utility") {
    CHECK(utility(1.0, 0.0) == 1.0);
    CHECK(utility(1.0, 1.0) == 0.0);
    CHECK(utility(4.0, 2.0) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(utility(0.0, 1.0), NumericError);
    CHECK_THROWS_AS(utility(-1.0, 0.0), NumericError);
    for (double nu : kAversionGrid) {
        for (double p : {0.3, 1.0, 7.5, 1e6}) CHECK(inverse_utility(utility(p, nu), nu) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("aversion grid") { CHECK(kAversionGrid == std::array<double, 5>{0.0, 1.0, 1.5, 2.0, 2.5}); }

TEST_CASE("welfare estimates") {
    SUBCASE("degenerate sample") {
        for (double nu : kAversionGrid) {
            const auto e = welfare_estimate(WeightedSample::unweighted({3.5, 3.5, 3.5, 3.5}), nu);
            CHECK(e.e_hat == doctest::Approx(3.5).epsilon(1e-12));
            CHECK(e.sigma2_W == doctest::Approx(0.0));
        }
    }
    SUBCASE("mean at nu = 0") {
        const auto e = welfare_estimate(WeightedSample::unweighted({1.0, 3.0}), 0.0);
        CHECK(e.W_hat == doctest::Approx(2.0));
        CHECK(e.e_hat == doctest::Approx(2.0));
    }
    SUBCASE("log case") {
        const auto e = welfare_estimate(WeightedSample::unweighted({1.0, std::exp(2.0)}), 1.0);
        CHECK(e.W_hat == doctest::Approx(1.0));
        CHECK(e.e_hat == doctest::Approx(std::numbers::e));
    }
    SUBCASE("matches the bisection oracle on weighted samples") {
        const auto s = with_weights(lognormal_sample(5, 400), 6);
        for (double nu : kAversionGrid) {
            CHECK(welfare_estimate(s, nu).e_hat == doctest::Approx(oracle::equivalent_wealth(s.values, s.weights, nu)).epsilon(1e-9));
        }
    }
    SUBCASE("negative welfare above one") {
        const auto e = welfare_estimate(WeightedSample::unweighted(lognormal_sample(1, 50)), 2.0);
        CHECK(e.W_hat < 0.0);
        CHECK(e.e_hat > 0.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(welfare_estimate(WeightedSample{}, 0.0), DataError);
        CHECK_THROWS(welfare_estimate(WeightedSample::unweighted({1.0, -1.0}), 0.0));
    }
}

TEST_CASE("equivalent wealth decreases in aversion and stays below the mean") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = with_weights(lognormal_sample(seed, 200), seed + 100);
        const double mean = oracle::weighted_mean(s.values, s.weights);
        double previous = 1e300;
        for (double nu : kAversionGrid) {
            const double e = welfare_estimate(s, nu).e_hat;
            CHECK(e < previous);
            CHECK(e <= mean * (1.0 + 1e-12));
            if (nu > 0.0) CHECK(e < mean);
            previous = e;
        }
        CHECK(welfare_estimate(s, 0.0).e_hat == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("wealth ratio") {
    const auto base = WeightedSample::unweighted(lognormal_sample(9, 300));
    SUBCASE("identical samples") {
        for (double nu : kAversionGrid) {
            const auto r = wealth_ratio(welfare_estimate(base, nu), welfare_estimate(base, nu));
            CHECK(r.psi_hat == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("scaled sample") {
        for (double c : {0.5, 0.9, 1.7}) {
            auto scaled = base;
            for (auto& v : scaled.values) v *= c;
            for (double nu : kAversionGrid) {
                const auto r = wealth_ratio(welfare_estimate(scaled, nu), welfare_estimate(base, nu));
                CHECK(std::abs(r.psi_hat - c) <= 1e-9 * c);
            }
        }
    }
    SUBCASE("delta method against finite differences") {
        const auto round = WeightedSample::unweighted(lognormal_sample(10, 300, 0.1));
        for (double nu : kAversionGrid) {
            const auto er = welfare_estimate(round, nu);
            const auto e0 = welfare_estimate(base, nu);
            const auto psi = [&](double wr, double w0) {
                return nu == 1.0 ? std::exp(wr - w0) : std::pow(wr / w0, 1.0 / (1.0 - nu));
            };
            const double h = 1e-6 * std::max(std::abs(er.W_hat), 1e-3);
            const double dr = (psi(er.W_hat + h, e0.W_hat) - psi(er.W_hat - h, e0.W_hat)) / (2 * h);
            const double d0 = (psi(er.W_hat, e0.W_hat + h) - psi(er.W_hat, e0.W_hat - h)) / (2 * h);
            const double expected = std::sqrt(dr * dr * er.sigma2_W + d0 * d0 * e0.sigma2_W);
            CHECK(wealth_ratio(er, e0).sigma_psi == doctest::Approx(expected).epsilon(1e-5));
        }
    }
    SUBCASE("undefined ratios") {
        WelfareEstimate a, b;
        a.nu = b.nu = 0.5;
        a.W_hat = 1.0;
        b.W_hat = 0.0;
        CHECK_THROWS_AS(wealth_ratio(a, b), NumericError);
        b.W_hat = -1.0;
        CHECK_THROWS_AS(wealth_ratio(a, b), NumericError);
        b.nu = 1.0;
        CHECK_THROWS_AS(wealth_ratio(a, b), ConfigError);
    }
}

TEST_CASE("ratio test") {
    const auto base = WeightedSample::unweighted(lognormal_sample(21, 400));
    RatioTestOptions options;
    options.bootstrap = {1000, 42, 0};

    SUBCASE("self comparison centres the statistic") {
        for (double nu : kAversionGrid) {
            const auto r = ratio_test(base, base, nu, options);
            CHECK(r.psi_hat == doctest::Approx(1.0));
            CHECK(r.theta == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(r.p_value >= 0.35);
            CHECK(r.p_value <= 0.65);
            CHECK(r.critical.at_1 <= r.critical.at_5);
            CHECK(r.critical.at_5 <= r.critical.at_10);
            CHECK(r.replications == 1000);
            CHECK(r.seed == 42);
        }
    }
    SUBCASE("p-value counts replications at or below the statistic") {
        options.keep_distribution = true;
        auto round = WeightedSample::unweighted(lognormal_sample(22, 400, -0.05));
        const auto r = ratio_test(round, base, 1.5, options);
        REQUIRE(r.distribution.size() == 1000);
        std::size_t below = 0;
        for (double t : r.distribution) below += t <= r.theta;
        CHECK(r.p_value == doctest::Approx(static_cast<double>(below) / 1000.0));
        CHECK(r.critical.at_5 == r.distribution[49]);
    }
    SUBCASE("p-value is invariant to a common variance scale") {
        auto round = WeightedSample::unweighted(lognormal_sample(23, 400, -0.03));
        options.bootstrap.replications = 300;
        const auto plain = ratio_test(round, base, 2.0, options);
        options.sigma_scale = 7.0;
        const auto scaled = ratio_test(round, base, 2.0, options);
        CHECK(plain.p_value == scaled.p_value);
    }
    SUBCASE("higher round wealth is never a rejection") {
        options.bootstrap.replications = 200;
        for (std::uint64_t rep = 0; rep < 10; ++rep) {
            const auto b = WeightedSample::unweighted(lognormal_sample(500 + rep, 300));
            auto up = WeightedSample::unweighted(lognormal_sample(600 + rep, 300));
            for (auto& v : up.values) v *= 1.5;
            options.bootstrap.seed = rep;
            for (double nu : kAversionGrid) CHECK_FALSE(ratio_test(up, b, nu, options).rejects(0.05));
        }
    }
    SUBCASE("determinism across thread counts") {
        auto round = WeightedSample::unweighted(lognormal_sample(24, 400, -0.02));
        options.keep_distribution = true;
        options.bootstrap.threads = 1;
        const auto one = ratio_test(round, base, 2.5, options);
        options.bootstrap.threads = 4;
        const auto four = ratio_test(round, base, 2.5, options);
        CHECK(one.distribution == four.distribution);
        CHECK(one.p_value == four.p_value);
    }
    SUBCASE("too few replications") {
        options.bootstrap.replications = 99;
        CHECK_THROWS_AS(ratio_test(base, base, 0.0, options), ConfigError);
    }
    SUBCASE("degenerate variance") { CHECK_THROWS_AS(ratio_test(WeightedSample::unweighted({2, 2, 2}), WeightedSample::unweighted({2, 2}), 0.0, options), NumericError); }
}
