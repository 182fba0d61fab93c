#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stoavg/generators.hpp"
#include "stoavg/limits.hpp"
#include "stoavg/stats.hpp"

using namespace stoavg;

TEST_CASE("drift examples", "[limits]") {
    SdeSpec single{single_deme(), 0.5, 0.91, 0.09};
    std::vector<double> x = {2.0};
    REQUIRE_THAT(drift(single, x)[0], Catch::Matchers::WithinAbs(1.18, 1e-12));

    SdeSpec migration{complete_kernel(2, 2.0), 0.0, 0.0, 0.0};
    std::vector<double> y = {1.0, 3.0};
    auto d = drift(migration, y);
    REQUIRE_THAT(d[0], Catch::Matchers::WithinAbs(4.0, 1e-12));
    REQUIRE_THAT(d[1], Catch::Matchers::WithinAbs(-4.0, 1e-12));
}

TEST_CASE("cross covariance rate example", "[limits]") {
    SdeSpec spec{complete_kernel(2, 1.0), 0.0, 0.0, 0.5};
    std::vector<double> x = {1.0, 2.0};
    auto cov = cross_covariance_rate(spec, x);
    REQUIRE_THAT(cov[0][0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(cov[0][1], Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(cov[1][0], Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(cov[1][1], Catch::Matchers::WithinAbs(4.0, 1e-12));

    SdeSpec branching{single_deme(), 0.0, 2.0, 0.0};
    std::vector<double> z = {3.0};
    REQUIRE_THAT(cross_covariance_rate(branching, z)[0][0],
                 Catch::Matchers::WithinAbs(6.0, 1e-12));
}

TEST_CASE("noiseless scheme converges at first order in dt", "[limits]") {
    SdeSpec spec{single_deme(), 0.5, 0.0, 0.0};
    auto run = [&](double dt) {
        Ensemble ens = euler_maruyama(spec, {1.0}, 1.0, dt, 1, 99);
        return ens.at(0, 0, 0);
    };
    double target = std::exp(0.5);
    double err_coarse = std::abs(run(1e-2) - target);
    double err_fine = std::abs(run(5e-3) - target);
    REQUIRE(err_coarse < 5e-3);
    REQUIRE(err_fine < 0.6 * err_coarse);
}

TEST_CASE("scheme mean matches exponential growth", "[limits]") {
    SdeSpec spec{single_deme(), 0.5, 0.91, 0.09};
    const std::size_t n_paths = 4000;
    Ensemble ens = euler_maruyama(spec, {1.0}, 1.0, 1e-3, n_paths, 101);
    std::vector<double> xs(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) xs[p] = ens.at(p, 0, 0);
    auto [mean, se] = detail::mean_se(xs);
    REQUIRE(std::abs(mean - std::exp(0.59)) <= 3.0 * se);
}

TEST_CASE("dt exceeding the horizon throws", "[limits]") {
    SdeSpec spec{single_deme(), 0.5, 0.91, 0.09};
    REQUIRE_THROWS_AS(euler_maruyama(spec, {1.0}, 1.0, 2.0, 1, 1), StepTooLarge);
    REQUIRE_THROWS_AS(euler_maruyama(spec, {1.0}, 1.0, 0.0, 1, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(euler_maruyama(spec, {1.0, 1.0}, 1.0, 0.1, 1, 1), std::invalid_argument);
}

TEST_CASE("shared noise induces positive cross-deme covariance", "[limits]") {
    SdeSpec spec{complete_kernel(2, 0.5), 0.0, 0.0, 0.25};
    Ensemble ens = euler_maruyama(spec, {1.0, 1.0}, 1.0, 1e-3, 3000, 103, {1.0});
    CovEstimate cov = cross_covariance(ens, 0, 0, 1);
    REQUIRE(cov.cov / cov.se > 3.0);

    // no migration, so any coupling would have to come from the noise
    MigrationKernel decoupled = validate_kernel({{0.0, 0.0}, {0.0, 0.0}}, {1.0, 1.0});
    SdeSpec indep{decoupled, 0.0, 1.0, 0.0};
    Ensemble ens2 = euler_maruyama(indep, {1.0, 1.0}, 1.0, 1e-3, 3000, 107, {1.0});
    CovEstimate cov2 = cross_covariance(ens2, 0, 0, 1);
    REQUIRE(std::abs(cov2.cov / cov2.se) <= 3.0);
}

TEST_CASE("walker limit marginals", "[limits]") {
    const std::size_t n_paths = 20'000;
    Ensemble ens = walker_limit_sample(1.0, 2.0, {1.0, 2.0}, n_paths, 109);
    std::vector<double> x1(n_paths), x2(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        x1[p] = ens.at(p, 0, 0);
        x2[p] = ens.at(p, 1, 0);
    }
    auto [m2, se2] = detail::mean_se(x2);
    REQUIRE(std::abs(m2 - 2.0) <= 3.0 * se2);
    KahanSum q;
    for (double x : x2) q.add((x - m2) * (x - m2));
    double var = q.value() / static_cast<double>(n_paths - 1);
    REQUIRE(std::abs(var - 8.0) <= 3.0 * std::sqrt(2.0 / n_paths) * 8.0);
    // increments over [1, 2] are independent of X_1
    KahanSum cross;
    for (std::size_t p = 0; p < n_paths; ++p)
        cross.add((x1[p] - 1.0) * (x2[p] - x1[p] - 1.0));
    double c = cross.value() / static_cast<double>(n_paths - 1);
    REQUIRE(std::abs(c) <= 3.0 * 4.0 / std::sqrt(static_cast<double>(n_paths)));
    REQUIRE(ks_vs_normal(x1, 1.0, 4.0).pass);
}

TEST_CASE("walker limit rejects bad inputs", "[limits]") {
    REQUIRE_THROWS_AS(walker_limit_sample(1.0, -1.0, {1.0}, 10, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(walker_limit_sample(1.0, 1.0, {1.0, 1.0}, 10, 1), std::invalid_argument);
}

TEST_CASE("scheme is deterministic across worker counts", "[limits]") {
    SdeSpec spec{complete_kernel(2, 1.0), 0.5, 0.91, 0.09};
    Ensemble a = euler_maruyama(spec, {1.0, 2.0}, 0.5, 0.01, 64, 113, {0.25, 0.5}, 1);
    Ensemble b = euler_maruyama(spec, {1.0, 2.0}, 0.5, 0.01, 64, 113, {0.25, 0.5}, 4);
    REQUIRE(a.data == b.data);
}
