#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cpsim/random.hpp"
#include "oracles.hpp"

using cpsim::Rng;

TEST_CASE("same seed reproduces the exact draw sequence", "[random]") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng c(1234, 7), d(1234, 8);
    bool all_equal = true;
    for (int i = 0; i < 64; ++i) all_equal &= (c.next_u64() == d.next_u64());
    REQUIRE_FALSE(all_equal);
}

TEST_CASE("uniform01 stays in the half-open unit interval", "[random]") {
    Rng rng(99);
    for (int i = 0; i < 100000; ++i) {
        double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("uniform_index covers the range without bias", "[random]") {
    Rng rng(5);
    std::vector<int> counts(7, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) counts[rng.uniform_index(7)] += 1;
    for (int c : counts) {
        REQUIRE(c > draws / 7 - 600);
        REQUIRE(c < draws / 7 + 600);
    }
    REQUIRE_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("beta sample mean matches the closed-form a/(a+b)", "[random]") {
    Rng rng(20240201);
    const double a = 2.0, b = 8.0;
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.beta(a, b);
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        sum += x;
    }
    const double expected = a / (a + b);  // 0.2
    REQUIRE(oracle::close_rel(sum / n, expected, 0.01));
}

TEST_CASE("gamma sample mean matches its shape", "[random]") {
    Rng rng(31);
    for (double shape : {0.5, 1.0, 3.0}) {
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += rng.gamma(shape);
        REQUIRE(oracle::close_rel(sum / n, shape, 0.02));
    }
}

TEST_CASE("exponential sample mean matches the configured mean", "[random]") {
    Rng rng(77);
    const double mean = 0.05;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = rng.exponential(mean);
        REQUIRE(d >= 0.0);
        sum += d;
    }
    REQUIRE(oracle::close_rel(sum / n, mean, 0.01));
    REQUIRE_THROWS_AS(rng.exponential(0.0), std::invalid_argument);
}

TEST_CASE("geometric trials agree with a Bernoulli-loop reference", "[random]") {
    const double beta = 0.3;
    const int n = 100000;

    Rng lib_rng(404);
    double lib_sum = 0.0;
    for (int i = 0; i < n; ++i) lib_sum += static_cast<double>(lib_rng.geometric_trials(beta));

    Rng ref_rng(405);
    double ref_sum = 0.0;
    for (int i = 0; i < n; ++i)
        ref_sum += static_cast<double>(oracle::bernoulli_trials_until_success(beta, ref_rng));

    const double expected = 1.0 / (1.0 - beta);
    REQUIRE(oracle::close_rel(lib_sum / n, expected, 0.01));
    REQUIRE(oracle::close_rel(ref_sum / n, expected, 0.01));
}

TEST_CASE("geometric trials edge cases", "[random]") {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) REQUIRE(rng.geometric_trials(0.0) == 1);
    for (int i = 0; i < 1000; ++i) REQUIRE(rng.geometric_trials(0.9) >= 1);
    REQUIRE_THROWS_AS(rng.geometric_trials(1.0), std::domain_error);
    REQUIRE_THROWS_AS(rng.geometric_trials(-0.1), std::domain_error);
}
