#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stoavg/lattice.hpp"
#include "stoavg/rng.hpp"

using namespace stoavg;

TEST_CASE("single deme kernel", "[lattice]") {
    MigrationKernel k = single_deme();
    REQUIRE(k.size() == 1);
    REQUIRE(k.mu == 0.0);
    REQUIRE(k.c == 0.0);
}

TEST_CASE("symmetric 3-cycle", "[lattice]") {
    MigrationKernel k = cycle_kernel(3, 1.0);
    REQUIRE(k.size() == 3);
    REQUIRE(k.mu == 2.0);
    REQUIRE(k.c == 2.0);
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(k.rate(i, i) == 0.0);
}

TEST_CASE("complete and torus kernels validate", "[lattice]") {
    MigrationKernel comp = complete_kernel(4, 0.5);
    REQUIRE(comp.mu == 1.5);
    MigrationKernel torus = torus_kernel(3, 3, 1.0);
    REQUIRE(torus.size() == 9);
    REQUIRE(torus.mu == 4.0);
}

TEST_CASE("unbalanced kernel rejected with deme cited", "[lattice]") {
    std::vector<std::vector<double>> a = {{0.0, 2.0}, {1.0, 0.0}};
    try {
        validate_kernel(a, {1.0, 1.0});
        FAIL("expected UnbalancedKernel");
    } catch (const UnbalancedKernel& e) {
        REQUIRE(std::string(e.what()).find("deme") != std::string::npos);
    }
}

TEST_CASE("kernel input validation", "[lattice]") {
    REQUIRE_THROWS_AS(validate_kernel({{0.0, 1.0}}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(validate_kernel({{0.0, 1.0}, {1.0, 0.0}}, {1.0, 0.0}), NonpositiveWeight);
    REQUIRE_THROWS_AS(validate_kernel({{0.5}}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(validate_kernel({{0.0, -1.0}, {-1.0, 0.0}}, {1.0, 1.0}),
                      std::invalid_argument);
}

TEST_CASE("ell_gamma norm values", "[lattice]") {
    MigrationKernel k = cycle_kernel(3, 1.0);
    std::vector<double> zero(3, 0.0);
    REQUIRE(ell_gamma_norm(zero, k) == 0.0);
    std::vector<double> x = {1.0, -2.0, 3.0};
    REQUIRE(ell_gamma_norm(x, k) == 6.0);

    std::vector<std::vector<double>> a = {{0.0, 1.0}, {1.0, 0.0}};
    MigrationKernel weighted = validate_kernel(a, {0.5, 0.25});
    std::vector<double> y = {4.0, 4.0};
    REQUIRE(ell_gamma_norm(y, weighted) == 3.0);
}

TEST_CASE("norm properties on random vectors", "[lattice]") {
    MigrationKernel k = cycle_kernel(4, 1.0);
    CounterRng rng(5, 0, 0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(4), y(4), sum(4);
        for (std::size_t i = 0; i < 4; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
            sum[i] = x[i] + y[i];
        }
        double lx = ell_gamma_norm(x, k), ly = ell_gamma_norm(y, k);
        REQUIRE(ell_gamma_norm(sum, k) <= lx + ly + 1e-12);
        double lam = 2.0 * rng.uniform() - 1.0;
        std::vector<double> sx(4);
        for (std::size_t i = 0; i < 4; ++i) sx[i] = lam * x[i];
        REQUIRE_THAT(ell_gamma_norm(sx, k),
                     Catch::Matchers::WithinAbs(std::abs(lam) * lx, 1e-10));
    }
}

TEST_CASE("stored c is minimal", "[lattice]") {
    std::vector<std::vector<double>> a = {{0.0, 1.0, 1.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 0.0}};
    MigrationKernel k = validate_kernel(a, {1.0, 2.0, 1.0});
    REQUIRE(k.mu == 2.0);
    REQUIRE(k.c == 3.0);
    // check the defining inequality holds at c and fails just below it
    for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += k.gamma[i] * k.rate(i, j);
        REQUIRE(s <= k.c * k.gamma[j] + 1e-12);
    }
    double c_down = k.c * (1.0 - 1e-6);
    bool violated = false;
    for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += k.gamma[i] * k.rate(i, j);
        if (s > c_down * k.gamma[j]) violated = true;
    }
    REQUIRE(violated);
}
