#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cmperc/rng.hpp"
#include "cmperc/stats.hpp"

using namespace cmperc;

TEST_CASE("ks distance basics") {
    REQUIRE(ks_distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    REQUIRE(ks_distance({0.0}, {1.0}) == 1.0);
    REQUIRE_THROWS_AS(ks_distance({}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(ks_distance({1.0}, {}), std::invalid_argument);
}

TEST_CASE("ks distance on two uniform samples is small") {
    Rng rng(1);
    std::vector<double> a, b;
    for (int i = 0; i < 10000; ++i) {
        a.push_back(rng.u01());
        b.push_back(rng.u01());
    }
    REQUIRE(ks_distance(a, b) < 0.03);
}

TEST_CASE("ks distance against a shifted sample detects the shift") {
    Rng rng(2);
    std::vector<double> a, b;
    for (int i = 0; i < 5000; ++i) {
        a.push_back(rng.u01());
        b.push_back(rng.u01() + 0.5);
    }
    REQUIRE(ks_distance(a, b) > 0.45);
}

TEST_CASE("fit_exponent recovers exact power laws") {
    std::vector<std::pair<double, double>> pts;
    for (double n : {1e3, 1e4, 1e5, 1e6})
        pts.emplace_back(n, std::pow(n, 1.0 / 3.0));
    const auto fit = fit_exponent(pts, FitMode::power_law);
    REQUIRE(fit.slope == Catch::Approx(1.0 / 3.0).margin(1e-12));
    REQUIRE(fit.stderr_slope < 1e-12);
    REQUIRE(fit.r_squared == Catch::Approx(1.0));
}

TEST_CASE("fit_exponent log-growth mode recovers the coefficient") {
    std::vector<std::pair<double, double>> pts;
    for (double n : {1e3, 1e4, 1e5, 1e6})
        pts.emplace_back(n, 7.0 * std::log(n));
    const auto fit = fit_exponent(pts, FitMode::log_growth);
    REQUIRE(fit.slope == Catch::Approx(7.0).margin(1e-9));
}

TEST_CASE("fit_exponent on noisy synthetic data") {
    Rng rng(3);
    std::vector<std::pair<double, double>> pts;
    for (double n = 1024; n <= 1 << 22; n *= 2)
        pts.emplace_back(n, std::pow(n, 1.0 / 3.0) * (1.0 + 0.1 * (2.0 * rng.u01() - 1.0)));
    const auto fit = fit_exponent(pts, FitMode::power_law);
    REQUIRE(fit.slope == Catch::Approx(1.0 / 3.0).margin(0.05));
}

TEST_CASE("fit_exponent input validation") {
    REQUIRE_THROWS_AS(fit_exponent({{1e3, 1.0}, {1e4, 2.0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(
        fit_exponent({{1e3, 1.0}, {1e4, -2.0}, {1e5, 3.0}}, FitMode::power_law),
        std::invalid_argument);
}

TEST_CASE("quantiles and median") {
    std::vector<double> v{5.0, 1.0, 3.0, 2.0, 4.0};
    REQUIRE(median(v) == 3.0);
    REQUIRE(quantile(v, 0.0) == 1.0);
    REQUIRE(quantile(v, 1.0) == 5.0);
    REQUIRE(mean(v) == Catch::Approx(3.0));
    REQUIRE(sample_sd(v) == Catch::Approx(std::sqrt(2.5)));
}

TEST_CASE("rng streams are reproducible and phase-separated") {
    Rng a = make_stream(123, 5, Phase::percolate);
    Rng b = make_stream(123, 5, Phase::percolate);
    for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
    Rng c = make_stream(123, 5, Phase::explore);
    bool differs = false;
    for (int i = 0; i < 100; ++i) differs |= (a() != c());
    REQUIRE(differs);
}

TEST_CASE("rng bounded draws are in range and roughly uniform") {
    Rng rng(9);
    std::vector<int> counts(10, 0);
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const auto x = rng.below(10);
        REQUIRE(x < 10);
        counts[static_cast<std::size_t>(x)] += 1;
    }
    for (int c : counts) REQUIRE(std::abs(c - N / 10) < 5 * std::sqrt(N * 0.1 * 0.9));
}
