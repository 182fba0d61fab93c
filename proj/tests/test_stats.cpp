#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stoavg/ensemble.hpp"
#include "stoavg/rng.hpp"
#include "stoavg/stats.hpp"

using namespace stoavg;

TEST_CASE("variance oracle closed form", "[stats]") {
    REQUIRE_THAT(variance_oracle(1.0, 1.0, 1.0),
                 Catch::Matchers::WithinAbs(2.0 * std::exp(-1.0), 1e-15));
    REQUIRE(variance_oracle(1.0, 0.0, 1.0) == 0.0);
    REQUIRE(variance_oracle(2.0, 1.0, 0.0) == 0.0);
    REQUIRE_THROWS_AS(variance_oracle(0.0, 1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(variance_oracle(1.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("variance oracle asymptotics", "[stats]") {
    // large rho t: approaches 2 t Var / rho
    double v = variance_oracle(100.0, 2.0, 1.0);
    REQUIRE(v / (2.0 * 2.0 / 100.0) > 0.95);
    REQUIRE(v / (2.0 * 2.0 / 100.0) < 1.0);
    // rho -> 0: approaches t^2 Var
    REQUIRE_THAT(variance_oracle(1e-8, 1.0, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-6));
    // continuity at the series/closed-form switch
    double lo = variance_oracle(1.0, 0.9999e-3, 1.0);
    double hi = variance_oracle(1.0, 1.0001e-3, 1.0);
    REQUIRE(std::abs(lo - hi) < 1e-9);
}

TEST_CASE("max bound examples", "[stats]") {
    REQUIRE(max_bound(1.0, 3.0, 2.0, 0.0) == 2.0);
    REQUIRE_THAT(max_bound(1.0, 0.0, 2.0, 1.0), Catch::Matchers::WithinAbs(3.0, 1e-12));
    REQUIRE_THROWS_AS(max_bound(0.0, 1.0, 2.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(max_bound(1.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("normal quantile inverts the cdf", "[stats]") {
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-6})
        REQUIRE_THAT(normal_cdf(normal_quantile(p)), Catch::Matchers::WithinAbs(p, 1e-12));
    REQUIRE(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-13));
    REQUIRE_THAT(normal_quantile(0.975), Catch::Matchers::WithinAbs(1.959963984540054, 1e-9));
    REQUIRE_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

namespace {

std::vector<double> normal_sample(std::size_t n, double mean, double sd, std::uint64_t seed) {
    CounterRng rng(seed, 0, 0);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = mean + sd * rng.normal();
    return out;
}

}  // namespace

TEST_CASE("two-sample KS accepts and rejects correctly", "[stats]") {
    auto a = normal_sample(3000, 0.0, 1.0, 401);
    auto b = normal_sample(3000, 0.0, 1.0, 402);
    auto c = normal_sample(3000, 3.0, 1.0, 403);
    TestVerdict same = ks_two_sample(a, b);
    REQUIRE(same.pass);
    REQUIRE(same.score_kind == "p");
    TestVerdict diff = ks_two_sample(a, c);
    REQUIRE_FALSE(diff.pass);
    REQUIRE(diff.score < 1e-6);
    // symmetry of the statistic
    REQUIRE(ks_two_sample(a, c).statistic == ks_two_sample(c, a).statistic);
    // invariance under a strictly increasing transform
    auto ta = a, tc = c;
    for (double& x : ta) x = std::exp(x);
    for (double& x : tc) x = std::exp(x);
    REQUIRE_THAT(ks_two_sample(ta, tc).statistic,
                 Catch::Matchers::WithinAbs(diff.statistic, 1e-12));
    REQUIRE_THROWS_AS(ks_two_sample({1.0}, a), std::invalid_argument);
}

TEST_CASE("one-sample KS against the normal", "[stats]") {
    auto a = normal_sample(5000, 2.0, 3.0, 404);
    REQUIRE(ks_vs_normal(a, 2.0, 9.0).pass);
    REQUIRE_FALSE(ks_vs_normal(a, 0.0, 9.0).pass);
    TestVerdict degenerate = ks_vs_normal(a, 2.0, 0.0);
    REQUIRE_FALSE(degenerate.pass);
    REQUIRE(degenerate.detail.find("degenerate") != std::string::npos);
}

TEST_CASE("ensemble summary on a constant ensemble", "[stats]") {
    Ensemble ens;
    ens.times = {0.5, 1.0};
    ens.n_demes = 2;
    ens.n_paths = 50;
    ens.allocate();
    for (std::size_t p = 0; p < 50; ++p)
        for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t d = 0; d < 2; ++d) ens.at(p, t, d) = 3.0 + double(d);
    EnsembleSummary s = ensemble_summary(ens);
    REQUIRE(s.at_mean(0, 0) == 3.0);
    REQUIRE(s.at_mean(1, 1) == 4.0);
    REQUIRE(s.at_var(0, 0) == 0.0);
    REQUIRE(s.at_se(1, 0) == 0.0);
    REQUIRE(s.at_cov(0, 0, 1) == 0.0);
}

TEST_CASE("ensemble summary matches direct moments", "[stats]") {
    Ensemble ens;
    ens.times = {1.0};
    ens.n_demes = 1;
    ens.n_paths = 2000;
    ens.allocate();
    CounterRng rng(405, 0, 0);
    std::vector<double> xs(2000);
    for (std::size_t p = 0; p < 2000; ++p) {
        xs[p] = rng.normal();
        ens.at(p, 0, 0) = xs[p];
    }
    EnsembleSummary s = ensemble_summary(ens);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= 2000.0;
    REQUIRE_THAT(s.at_mean(0, 0), Catch::Matchers::WithinAbs(mean, 1e-12));
    REQUIRE(std::abs(s.at_var(0, 0) - 1.0) < 0.1);
    REQUIRE_THAT(s.at_se(0, 0),
                 Catch::Matchers::WithinAbs(std::sqrt(s.at_var(0, 0) / 2000.0), 1e-12));
    REQUIRE(variance_se(xs) > 0.0);
    REQUIRE(variance_se(xs) < 0.1);
}

TEST_CASE("comparing an ensemble with itself passes everywhere", "[stats]") {
    Ensemble ens;
    ens.times = {0.5, 1.0};
    ens.n_demes = 1;
    ens.n_paths = 500;
    ens.allocate();
    CounterRng rng(406, 0, 0);
    for (std::size_t p = 0; p < 500; ++p)
        for (std::size_t t = 0; t < 2; ++t) ens.at(p, t, 0) = rng.normal();
    auto verdicts = compare_ensembles(ens, ens);
    REQUIRE(verdicts.size() == 6);
    for (const auto& v : verdicts) REQUIRE(v.pass);

    Ensemble other = ens;
    other.times = {0.5};
    REQUIRE_THROWS_AS(compare_ensembles(ens, other), std::invalid_argument);
}

TEST_CASE("conditional variance identity on synthetic data", "[stats]") {
    // integrals built so that (integral - mean t)^2 = var_y * sum_sq exactly
    std::vector<SwitchingIntegral> paths(50);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        double v = 0.1 + 0.01 * static_cast<double>(i);
        paths[i].integral = v;
        paths[i].sum_sq_intervals = v * v / 2.0;  // var_y = 2, mean 0
    }
    TestVerdict v = conditional_variance_identity_check(paths, 0.0, 2.0, 1.0);
    REQUIRE(v.pass);
    REQUIRE_THAT(v.statistic, Catch::Matchers::WithinAbs(2.0, 1e-12));
    REQUIRE_THROWS_AS(conditional_variance_identity_check({}, 0.0, 1.0, 1.0),
                      std::invalid_argument);
}

TEST_CASE("martingale residual separates drift scales", "[stats]") {
    // Brownian motion with drift 1: f(x) = x, Af = a
    Ensemble ens = walker_limit_sample(1.0, 1.0, {0.25, 0.5, 0.75, 1.0}, 4000, 407);
    TestFunction f = poly_bump({0}, {1});
    auto af_correct = [](std::span<const double>) { return 1.0; };
    auto af_wrong = [](std::span<const double>) { return 2.0; };
    REQUIRE(martingale_residual(ens, f, af_correct).pass);
    REQUIRE_FALSE(martingale_residual(ens, f, af_wrong).pass);
}
