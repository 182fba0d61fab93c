#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stoavg/rng.hpp"

using stoavg::CounterRng;

TEST_CASE("streams are reproducible and independent", "[rng]") {
    CounterRng a(42, 3, 1), b(42, 3, 1), c(42, 4, 1), d(43, 3, 1);
    bool differs_path = false, differs_seed = false;
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        REQUIRE(va == b.next_u64());
        if (va != c.next_u64()) differs_path = true;
        if (va != d.next_u64()) differs_seed = true;
    }
    REQUIRE(differs_path);
    REQUIRE(differs_seed);
}

TEST_CASE("uniform moments", "[rng]") {
    CounterRng rng(7, 0, 0);
    const int n = 100'000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    REQUIRE(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal moments", "[rng]") {
    CounterRng rng(11, 0, 0);
    const int n = 100'000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = rng.normal();
        sum += g;
        sq += g * g;
    }
    REQUIRE(std::abs(sum / n) < 4.0 / std::sqrt(double(n)));
    REQUIRE(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("exponential mean", "[rng]") {
    CounterRng rng(13, 0, 0);
    const int n = 100'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.exponential(2.0);
    REQUIRE(std::abs(sum / n - 0.5) < 4.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("poisson mean and variance", "[rng]") {
    CounterRng rng(17, 0, 0);
    const int n = 50'000;
    for (double mean : {0.5, 10.0, 900.0}) {
        double sum = 0.0, sq = 0.0;
        int reps = mean > 100.0 ? 5000 : n;
        for (int i = 0; i < reps; ++i) {
            double k = static_cast<double>(rng.poisson(mean));
            sum += k;
            sq += k * k;
        }
        double m = sum / reps;
        double v = sq / reps - m * m;
        REQUIRE(std::abs(m - mean) < 5.0 * std::sqrt(mean / reps));
        REQUIRE(std::abs(v - mean) < 0.1 * mean + 5.0 * mean * std::sqrt(2.0 / reps));
    }
}

TEST_CASE("categorical frequencies", "[rng]") {
    CounterRng rng(19, 0, 0);
    std::vector<double> probs = {0.1, 0.6, 0.3};
    std::vector<int> hits(3, 0);
    const int n = 100'000;
    for (int i = 0; i < n; ++i) ++hits[rng.categorical(probs)];
    for (std::size_t k = 0; k < 3; ++k) {
        double f = static_cast<double>(hits[k]) / n;
        REQUIRE(std::abs(f - probs[k]) < 4.0 * std::sqrt(probs[k] / n) + 1e-3);
    }
}
