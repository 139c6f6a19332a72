#include "hwd/report.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hwd;

TEST_CASE("weighted quantiles") {
    const std::vector<double> v{1, 2, 3, 4};
    const std::vector<double> w{1, 1, 1, 1};
    CHECK(weighted_quantile(v, w, 0.5) == 2.5);
    CHECK(weighted_quantile(v, w, 0.25) == 1.5);
    CHECK(weighted_quantile(v, w, 0.0) == 1.0);
    CHECK(weighted_quantile(v, w, 1.0) == 4.0);
    // a heavy last value pulls the median up
    CHECK(weighted_quantile(v, std::vector<double>{1, 1, 1, 5}, 0.5) > 3.0);
    CHECK(weighted_quantile(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 2}, 0.5) == 2.5);
    // order of the input does not matter
    CHECK(weighted_quantile(std::vector<double>{4, 1, 3, 2}, w, 0.5) == 2.5);
}

TEST_CASE("summaries") {
    SUBCASE("degenerate sample") {
        const auto s = summarize(WeightedSample::unweighted({7.0, 7.0, 7.0}));
        CHECK(s.n == 3);
        CHECK(s.total_weight == 3.0);
        CHECK(s.mean == 7.0);
        CHECK(s.min == 7.0);
        CHECK(s.median == 7.0);
        CHECK(s.max == 7.0);
    }
    SUBCASE("symmetric sample") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> normal(10.0, 2.0);
        std::vector<double> values(5000);
        for (auto& v : values) v = normal(rng);
        const auto s = summarize(WeightedSample::unweighted(values));
        CHECK(std::abs(s.mean - s.median) <= 0.1);
        CHECK(std::abs((s.q3 - s.median) - (s.median - s.q1)) <= 0.15);
        CHECK(s.min <= s.q1);
        CHECK(s.q3 <= s.max);
    }
    SUBCASE("weights move the mean") {
        WeightedSample w = WeightedSample::unweighted({1.0, 3.0});
        w.weights = {1.5, 0.5};
        CHECK(summarize(w).mean == doctest::Approx(1.5));
    }
}

TEST_CASE("density trace") {
    std::vector<double> values;
    for (int k = 0; k < 200; ++k) values.push_back(std::sin(0.37 * k));
    const auto d = density_trace(WeightedSample::unweighted(values), 256);
    REQUIRE(d.x.size() == 256);
    REQUIRE(d.density.size() == 256);
    CHECK(d.bandwidth > 0.0);
    double integral = 0.0;
    for (std::size_t k = 1; k < d.x.size(); ++k) {
        integral += 0.5 * (d.density[k] + d.density[k - 1]) * (d.x[k] - d.x[k - 1]);
        CHECK(d.density[k] >= 0.0);
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
}
