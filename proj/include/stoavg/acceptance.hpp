#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "stoavg/common.hpp"
#include "stoavg/ensemble.hpp"
#include "stoavg/env.hpp"
#include "stoavg/generators.hpp"
#include "stoavg/io.hpp"
#include "stoavg/lattice.hpp"
#include "stoavg/limits.hpp"
#include "stoavg/rng.hpp"
#include "stoavg/simulate.hpp"
#include "stoavg/stats.hpp"

namespace stoavg {

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// q must not increase by more than `slack` standard errors between
// consecutive entries (plus a small absolute cushion so that values that are
// equal up to float rounding count as ties).
inline bool monotone_decreasing(const std::vector<double>& q, const std::vector<double>& se,
                                double slack = 2.0) {
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        double tol = slack * std::sqrt(se[i] * se[i] + se[i + 1] * se[i + 1]) + 1e-9;
        if (q[i + 1] > q[i] + tol) return false;
    }
    return true;
}

}  // namespace detail

// 1. Monte Carlo variance of the switching integral matches the closed form
//    on a (rho, t) grid within 3 standard errors.
inline TestVerdict criterion_variance_oracle(unsigned workers = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1101 + seed_offset;
    const std::size_t n_paths = 100'000;
    SpeedLaw fair{{-1.0, 1.0}, {0.5, 0.5}};
    TestVerdict v;
    v.name = "c01_variance_oracle";
    v.seed = seed;
    v.samples = 9 * n_paths;
    double worst = 0.0;
    std::string worst_cell;
    std::size_t cell = 0;
    for (double rho : {1.0, 4.0, 16.0})
        for (double t : {0.5, 1.0, 2.0}) {
            std::vector<double> integrals(n_paths);
            parallel_for(n_paths, workers ? workers : default_workers(), [&](std::size_t p) {
                std::uint64_t path = cell * 1'000'000 + p;
                CounterRng timing(seed, path, detail::kTiming);
                CounterRng draws(seed, path, detail::kSelection);
                integrals[p] = switching_integral(fair, rho, t, timing, draws).integral;
            });
            auto [mean, mse] = detail::mean_se(integrals);
            KahanSum q;
            for (double x : integrals) q.add((x - mean) * (x - mean));
            double var = q.value() / static_cast<double>(n_paths - 1);
            double se = variance_se(integrals);
            double target = variance_oracle(rho, t, 1.0);
            double z = (var - target) / se;
            if (std::abs(z) > std::abs(worst)) {
                worst = z;
                worst_cell = "rho=" + detail::fmt(rho) + " t=" + detail::fmt(t);
            }
            ++cell;
        }
    v.statistic = worst;
    v.score = worst;
    v.pass = std::abs(worst) <= 3.0;
    v.detail = "worst cell " + worst_cell + ", z=" + detail::fmt(worst);
    return v;
}

// 2. Regression of squared centered integrals on the summed squared sojourn
//    intervals recovers Var[Y_0] within 3 SE.
inline TestVerdict criterion_conditional_identity(unsigned workers = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1102 + seed_offset;
    const std::size_t n_paths = 100'000;
    const double rho = 2.0, t = 1.0;
    SpeedLaw fair{{-1.0, 1.0}, {0.5, 0.5}};
    std::vector<SwitchingIntegral> paths(n_paths);
    parallel_for(n_paths, workers ? workers : default_workers(), [&](std::size_t p) {
        CounterRng timing(seed, p, detail::kTiming);
        CounterRng draws(seed, p, detail::kSelection);
        paths[p] = switching_integral(fair, rho, t, timing, draws);
    });
    TestVerdict v = conditional_variance_identity_check(paths, 0.0, 1.0, t);
    v.name = "c02_conditional_identity";
    v.seed = seed;
    return v;
}

// 3. Walker CLT: n = 30, speed mean 1/n, speed variance 1/2; the marginal at
//    t = 1 matches N(1, 1) in mean, variance, and KS.
inline TestVerdict criterion_walker_clt(unsigned workers = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1103 + seed_offset;
    const long n = 30;
    const std::size_t n_paths = 10'000;
    const double s = std::sqrt(0.5);
    SpeedLaw law{{1.0 / 30.0 - s, 1.0 / 30.0 + s}, {0.5, 0.5}};
    Ensemble ens = walker_ensemble(law, n, 1.0, {1.0}, n_paths, seed, workers);
    std::vector<double> x(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) x[p] = ens.at(p, 0, 0);
    auto [mean, se] = detail::mean_se(x);
    KahanSum q;
    for (double xi : x) q.add((xi - mean) * (xi - mean));
    double var = q.value() / static_cast<double>(n_paths - 1);
    double mean_z = (mean - 1.0) / se;
    double var_rel = std::abs(var - 1.0);
    TestVerdict ks = ks_vs_normal(x, 1.0, 1.0, 0.01);
    TestVerdict v;
    v.name = "c03_walker_clt";
    v.seed = seed;
    v.samples = n_paths;
    v.statistic = ks.statistic;
    v.score = ks.score;
    v.score_kind = "p";
    v.pass = std::abs(mean_z) <= 3.0 && var_rel <= 0.05 && ks.pass;
    v.detail = "mean_z=" + detail::fmt(mean_z) + " |var-1|=" + detail::fmt(var_rel) +
               " ks_p=" + detail::fmt(ks.score);
    return v;
}

// 4. Fresh-draw Poisson-equation identity: residual below 1e-12 on 1000
//    randomized (f, x, z, env, n) tuples.
inline TestVerdict criterion_poisson_identity(unsigned = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1104 + seed_offset;
    CounterRng rng(seed, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        long n = 5 + static_cast<long>(rng.next_u64() % 196);
        std::size_t dim = 1 + rng.next_u64() % 3;
        std::vector<double> x(dim);
        for (auto& xi : x) xi = 0.1 + 1.9 * rng.uniform();
        EnvironmentLaw env;
        env.n = n;
        std::size_t n_atoms = 1 + rng.next_u64() % 3;
        std::vector<double> weights(n_atoms);
        double wsum = 0.0;
        for (auto& w : weights) {
            w = 0.1 + rng.uniform();
            wsum += w;
        }
        for (std::size_t a = 0; a < n_atoms; ++a) {
            OffspringLaw law;
            std::size_t sup = 2 + rng.next_u64() % 3;
            std::vector<double> ps(sup);
            double psum = 0.0;
            for (auto& p : ps) {
                p = 0.05 + rng.uniform();
                psum += p;
            }
            for (std::size_t k = 0; k < sup; ++k)
                law.probs.emplace_back(static_cast<long>(k), ps[k] / psum);
            env.atoms.push_back({std::move(law), weights[a] / wsum});
        }
        env.validate();
        std::vector<std::size_t> active(dim);
        std::vector<int> exps(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            active[d] = d;
            exps[d] = static_cast<int>(rng.next_u64() % 4);
        }
        TestFunction f = poly_bump(active, exps);
        const OffspringLaw& z = env.atoms[rng.next_u64() % n_atoms].law;
        worst = std::max(worst, poisson_identity_residual(f.value, x, z, env, n));
    }
    TestVerdict v;
    v.name = "c04_poisson_identity";
    v.seed = seed;
    v.samples = 1000;
    v.statistic = worst;
    v.score = worst;
    v.score_kind = "residual";
    v.pass = worst <= 1e-12;
    v.detail = "max residual " + detail::fmt(worst);
    return v;
}

// 5. Particle system at n = 50 against the Euler scheme of the limit SDE:
//    means agree with each other and with e^{0.59}; variances agree within
//    10% relative; the two-deme variant shows matching cross-deme covariance.
inline TestVerdict criterion_brwre_vs_sde(unsigned workers = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1105 + seed_offset;
    const long n = 50;
    const std::size_t n_paths = 2000;
    const double alpha = 0.5, sigma_e = 0.3;
    const double sigma_e2 = sigma_e * sigma_e;          // 0.09
    const double sigma_b2 = 1.0 - sigma_e2;             // 0.91 at leading order
    const double target_mean = std::exp(alpha + sigma_e2);

    EnvironmentLaw env = two_point_environment(alpha, sigma_e, n);
    std::ostringstream detail_os;
    bool pass = true;

    // single deme
    {
        MigrationKernel kernel = single_deme();
        ParticleState x0;
        x0.n = n;
        x0.counts = {n};
        Ensemble particle = brwre_ensemble(kernel, env, x0, 1.0, {1.0}, n_paths, seed, workers);
        SdeSpec spec{kernel, alpha, sigma_b2, sigma_e2};
        Ensemble sde =
            euler_maruyama(spec, {1.0}, 1.0, 1e-3, n_paths, seed + 1, {1.0}, workers);

        std::vector<double> xa(n_paths), xb(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            xa[p] = particle.at(p, 0, 0);
            xb[p] = sde.at(p, 0, 0);
        }
        auto [ma, sea] = detail::mean_se(xa);
        auto [mb, seb] = detail::mean_se(xb);
        double cross_z = (ma - mb) / std::sqrt(sea * sea + seb * seb);
        double za = (ma - target_mean) / sea;
        double zb = (mb - target_mean) / seb;
        KahanSum qa, qb;
        for (double x : xa) qa.add((x - ma) * (x - ma));
        for (double x : xb) qb.add((x - mb) * (x - mb));
        double va = qa.value() / static_cast<double>(n_paths - 1);
        double vb = qb.value() / static_cast<double>(n_paths - 1);
        double var_rel = std::abs(va - vb) / (0.5 * (va + vb));
        pass = pass && std::abs(cross_z) <= 3.0 && std::abs(za) <= 3.0 &&
               std::abs(zb) <= 3.0 && var_rel <= 0.10;
        detail_os << "1d: mean_z(cross)=" << detail::fmt(cross_z)
                  << " mean_z(target)=" << detail::fmt(za) << "/" << detail::fmt(zb)
                  << " var_rel=" << detail::fmt(var_rel);
    }

    // two demes with symmetric rate-1 migration
    {
        MigrationKernel kernel = complete_kernel(2, 1.0);
        ParticleState x0;
        x0.n = n;
        x0.counts = {n, n};
        Ensemble particle =
            brwre_ensemble(kernel, env, x0, 1.0, {1.0}, n_paths, seed + 2, workers);
        SdeSpec spec{kernel, alpha, sigma_b2, sigma_e2};
        Ensemble sde =
            euler_maruyama(spec, {1.0, 1.0}, 1.0, 1e-3, n_paths, seed + 3, {1.0}, workers);
        CovEstimate ca = cross_covariance(particle, 0, 0, 1);
        CovEstimate cb = cross_covariance(sde, 0, 0, 1);
        double za = ca.cov / ca.se;
        double zb = cb.cov / cb.se;
        double agree = (ca.cov - cb.cov) / std::sqrt(ca.se * ca.se + cb.se * cb.se);
        pass = pass && za > 3.0 && zb > 3.0 && std::abs(agree) <= 3.0;
        detail_os << "; 2d: cov_z=" << detail::fmt(za) << "/" << detail::fmt(zb)
                  << " agree_z=" << detail::fmt(agree);
    }

    TestVerdict v;
    v.name = "c05_brwre_vs_sde";
    v.seed = seed;
    v.samples = 4 * n_paths;
    v.pass = pass;
    v.detail = detail_os.str();
    return v;
}

// 6. Iterated first-order generator: the environment average approaches
//    A2(., sigma_e^2) at rate ~ 1/n, halving ratio in [0.3, 0.7], relative
//    error below 5% at n = 100.  Uses an environment family whose offspring
//    mean and variance are correlated, so the 1/n term is present.
inline TestVerdict criterion_iterated_generator(unsigned = 0, std::uint64_t = 0) {
    const double alpha = 0.4, sigma_e = 0.3;
    const double sigma_e2 = sigma_e * sigma_e;
    auto family = [&](long n) { return correlated_environment(alpha, sigma_e, 0.3, 0.7, n); };
    struct Case {
        TestFunction f;
        std::vector<double> x;
        std::string label;
    };
    std::vector<Case> cases;
    cases.push_back({poly_bump({0}, {2}), {1.0}, "x^2"});
    cases.push_back({poly_bump({0, 1}, {2, 1}), {1.0, 0.8}, "x0^2*x1"});

    bool pass = true;
    std::ostringstream detail_os;
    for (const auto& c : cases) {
        std::vector<double> errs;
        double a2 = A2(c.f, c.x, sigma_e2);
        for (long n : {25L, 50L, 100L}) {
            EnvironmentLaw env = family(n);
            double mean = env.expect([&](const OffspringLaw& z) {
                return iterated_L1(c.f.value, c.x, z, n);
            });
            errs.push_back(std::abs(mean - a2));
        }
        double r1 = errs[1] / errs[0];
        double r2 = errs[2] / errs[1];
        double rel = errs[2] / std::abs(a2);
        bool ok = r1 >= 0.3 && r1 <= 0.7 && r2 >= 0.3 && r2 <= 0.7 && rel < 0.05;
        pass = pass && ok;
        detail_os << c.label << ": ratios=" << detail::fmt(r1) << "," << detail::fmt(r2)
                  << " rel@100=" << detail::fmt(rel) << "; ";
    }
    TestVerdict v;
    v.name = "c06_iterated_generator";
    v.samples = 6;
    v.pass = pass;
    v.detail = detail_os.str();
    return v;
}

// 7. Averaging hypotheses: quantities (i)-(iii) decrease along n (up to 2 SE),
//    quantity (iv) stays bounded.
inline TestVerdict criterion_averaging_report(unsigned = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1107 + seed_offset;
    const double alpha = 0.4, sigma_e = 0.3;
    auto family = [&](long n) { return two_point_environment(alpha, sigma_e, n); };
    TestFunction f = poly_bump({0}, {2});
    std::vector<std::vector<double>> state_grid;
    for (int i = 1; i <= 10; ++i) state_grid.push_back({0.2 * i});
    AveragingReport rep = averaging_condition_report(
        f, single_deme(), family, {10, 20, 40, 80}, 0.5, 150, seed, state_grid, {1.0});

    std::vector<double> q1, s1, q2, s2, q3, s3, q4;
    for (const auto& r : rep.rows) {
        q1.push_back(r.h_sup_mean);
        s1.push_back(r.h_sup_se);
        q2.push_back(r.a1_gap_sup);
        s2.push_back(0.0);
        q3.push_back(r.a2_gap_mean);
        s3.push_back(r.a2_gap_se);
        q4.push_back(r.lp_mean);
    }
    bool m1 = detail::monotone_decreasing(q1, s1);
    bool m2 = detail::monotone_decreasing(q2, s2);
    bool m3 = detail::monotone_decreasing(q3, s3);
    double lp_max = *std::max_element(q4.begin(), q4.end());
    bool bounded = std::isfinite(lp_max) && lp_max <= 10.0 * q4.front() + 1.0;
    TestVerdict v;
    v.name = "c07_averaging_report";
    v.seed = seed;
    v.samples = rep.rows.size();
    v.pass = m1 && m2 && m3 && bounded;
    std::ostringstream os;
    os << "(i) " << (m1 ? "dec" : "NOT dec") << " [";
    for (double q : q1) os << detail::fmt(q) << " ";
    os << "]; (ii) " << (m2 ? "dec" : "NOT dec") << " [";
    for (double q : q2) os << detail::fmt(q) << " ";
    os << "]; (iii) " << (m3 ? "dec" : "NOT dec") << " [";
    for (double q : q3) os << detail::fmt(q) << " ";
    os << "]; (iv) max=" << detail::fmt(lp_max);
    v.detail = os.str();
    return v;
}

// 8. Empirical mean of the max over 1 + Poisson(rho) iid Exp(1) draws stays
//    below the closed-form bound on a 27-cell (alpha, rho, p) grid.
inline TestVerdict criterion_max_bound(unsigned = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1108 + seed_offset;
    const std::size_t reps = 10'000;
    bool pass = true;
    double worst_margin = 1e300;
    std::string worst_cell;
    std::uint64_t path = 0;
    for (double alpha : {0.5, 1.0, 2.0})
        for (double rho : {0.0, 1.0, 4.0})
            for (double p : {1.5, 2.0, 3.0}) {
                CounterRng rng(seed, path++, 0);
                KahanSum acc;
                for (std::size_t r = 0; r < reps; ++r) {
                    std::uint64_t count = 1 + (rho > 0.0 ? rng.poisson(rho) : 0);
                    double mx = 0.0;
                    for (std::uint64_t i = 0; i < count; ++i)
                        mx = std::max(mx, rng.exponential(1.0));
                    acc.add(mx);
                }
                double emp = acc.value() / static_cast<double>(reps);
                double bound = max_bound(alpha, rho, p, std::tgamma(1.0 + p));
                double margin = bound - emp;
                if (margin < worst_margin) {
                    worst_margin = margin;
                    worst_cell = "alpha=" + detail::fmt(alpha) + " rho=" + detail::fmt(rho) +
                                 " p=" + detail::fmt(p);
                }
                pass = pass && emp <= bound;
            }
    TestVerdict v;
    v.name = "c08_max_bound";
    v.seed = seed;
    v.samples = 27 * reps;
    v.statistic = worst_margin;
    v.pass = pass;
    v.detail = "tightest margin " + detail::fmt(worst_margin) + " at " + worst_cell;
    return v;
}

// 9. Martingale-residual test passes with the correct generator on drifted
//    Brownian motion and on the SDE ensemble, and fails with the drift
//    doubled.
inline TestVerdict criterion_martingale_residual(unsigned workers = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 1109 + seed_offset;
    std::vector<double> grid;
    for (int i = 1; i <= 8; ++i) grid.push_back(0.125 * i);
    bool pass = true;
    std::ostringstream detail_os;

    {
        const double a = 1.0, sigma = 1.0;
        Ensemble bm = walker_limit_sample(a, sigma, grid, 5000, seed, workers);
        TestFunction f = poly_bump({0}, {2}, 0.25);
        auto gen = [&](double drift) {
            return [&f, drift, sigma](std::span<const double> x) {
                return drift * f.grad(0, x) + 0.5 * sigma * sigma * f.hess(0, 0, x);
            };
        };
        TestVerdict ok = martingale_residual(bm, f, gen(a));
        TestVerdict bad = martingale_residual(bm, f, gen(2.0 * a));
        pass = pass && ok.pass && !bad.pass;
        detail_os << "bm: z=" << detail::fmt(ok.score) << " (doubled z=" << detail::fmt(bad.score)
                  << ")";
    }

    {
        SdeSpec spec{single_deme(), 0.5, 0.91, 0.09};
        Ensemble sde = euler_maruyama(spec, {1.0}, 1.0, 1e-3, 3000, seed + 1, grid, workers);
        TestFunction f = poly_bump({0}, {1});
        auto gen = [&](double scale) {
            return [&f, spec, scale](std::span<const double> x) {
                double a1 = A1(f, x, spec);
                double a2 = A2(f, x, spec.sigma_e2);
                double correct = a1 + a2;
                // scaling the drift part only
                double drift_part = (spec.alpha + spec.sigma_e2) * x[0] * f.grad(0, x);
                return correct + (scale - 1.0) * drift_part;
            };
        };
        TestVerdict ok = martingale_residual(sde, f, gen(1.0));
        TestVerdict bad = martingale_residual(sde, f, gen(2.0));
        pass = pass && ok.pass && !bad.pass;
        detail_os << "; sde: z=" << detail::fmt(ok.score)
                  << " (doubled z=" << detail::fmt(bad.score) << ")";
    }

    TestVerdict v;
    v.name = "c09_martingale_residual";
    v.seed = seed;
    v.samples = 8000;
    v.pass = pass;
    v.detail = detail_os.str();
    return v;
}

// 10. Moment report of the two-point family: drift_n = alpha and
//     var_m = sigma_e^2 exactly for dyadic parameters, and
//     mean_v = 1 - sigma_e^2 - alpha^2/n^2.
inline TestVerdict criterion_moment_exactness(unsigned = 0, std::uint64_t = 0) {
    bool pass = true;
    std::ostringstream detail_os;
    for (long n : {8L, 16L, 32L}) {
        const double alpha = 0.5, sigma_e = 0.25;
        MomentReport rep = moment_report(two_point_environment(alpha, sigma_e, n), 4.0);
        double mv = 1.0 - sigma_e * sigma_e - alpha * alpha / (double(n) * double(n));
        bool ok = rep.drift_n == alpha && rep.var_m == sigma_e * sigma_e && rep.mean_v == mv;
        pass = pass && ok;
        if (!ok)
            detail_os << "n=" << n << " dyadic mismatch: drift=" << detail::fmt(rep.drift_n)
                      << " var_m=" << detail::fmt(rep.var_m)
                      << " mean_v=" << detail::fmt(rep.mean_v) << "; ";
    }
    {
        const double alpha = 0.4, sigma_e = 0.3;
        const long n = 100;
        MomentReport rep = moment_report(two_point_environment(alpha, sigma_e, n), 4.0);
        double mv = 1.0 - sigma_e * sigma_e - alpha * alpha / (double(n) * double(n));
        bool ok = std::abs(rep.drift_n - alpha) <= 1e-12 &&
                  std::abs(rep.var_m - sigma_e * sigma_e) <= 1e-12 &&
                  std::abs(rep.mean_v - mv) <= 1e-12;
        pass = pass && ok;
        if (!ok) detail_os << "non-dyadic case exceeds 1e-12";
    }
    TestVerdict v;
    v.name = "c10_moment_exactness";
    v.samples = 4;
    v.pass = pass;
    v.detail = pass ? "exact for dyadic inputs, <=1e-12 otherwise" : detail_os.str();
    return v;
}

// 11. Determinism: the artifacts of representative runs are byte-identical
//     across worker counts and reruns.
inline TestVerdict criterion_determinism(unsigned = 0, std::uint64_t seed_offset = 0) {
    const std::uint64_t seed = 7 + seed_offset;
    auto walker_csv = [&](unsigned workers) {
        SpeedLaw law{{0.0, 0.2}, {0.5, 0.5}};
        std::vector<double> grid;
        for (int i = 1; i <= 10; ++i) grid.push_back(0.1 * i);
        Ensemble ens = walker_ensemble(law, 10, 1.0, grid, 100, seed, workers);
        std::ostringstream os;
        ensemble_to_csv(os, ens);
        return os.str();
    };
    auto brwre_csv = [&](unsigned workers) {
        EnvironmentLaw env = two_point_environment(0.5, 0.3, 10);
        ParticleState x0;
        x0.n = 10;
        x0.counts = {10, 10};
        Ensemble ens =
            brwre_ensemble(complete_kernel(2, 1.0), env, x0, 1.0, {0.5, 1.0}, 50, seed, workers);
        std::ostringstream os;
        ensemble_to_csv(os, ens);
        return os.str();
    };
    auto sde_csv = [&](unsigned workers) {
        SdeSpec spec{single_deme(), 0.5, 0.91, 0.09};
        Ensemble ens = euler_maruyama(spec, {1.0}, 1.0, 0.01, 50, seed, {0.5, 1.0}, workers);
        std::ostringstream os;
        ensemble_to_csv(os, ens);
        return os.str();
    };
    bool pass = true;
    std::ostringstream detail_os;
    struct Job {
        const char* label;
        std::function<std::string(unsigned)> make;
    };
    std::vector<Job> jobs = {{"walker", walker_csv}, {"brwre", brwre_csv}, {"sde", sde_csv}};
    for (const auto& job : jobs) {
        std::string w1 = job.make(1);
        std::string w4 = job.make(4);
        std::string again = job.make(1);
        bool ok = w1 == w4 && w1 == again && !w1.empty();
        pass = pass && ok;
        detail_os << job.label << (ok ? " ok" : " MISMATCH") << "; ";
    }
    TestVerdict v;
    v.name = "c11_determinism";
    v.seed = seed;
    v.samples = 9;
    v.pass = pass;
    v.detail = detail_os.str();
    return v;
}

inline std::vector<TestVerdict> run_acceptance(unsigned workers = 0,
                                               std::uint64_t seed_offset = 0) {
    return {criterion_variance_oracle(workers, seed_offset),
            criterion_conditional_identity(workers, seed_offset),
            criterion_walker_clt(workers, seed_offset),
            criterion_poisson_identity(workers, seed_offset),
            criterion_brwre_vs_sde(workers, seed_offset),
            criterion_iterated_generator(workers, seed_offset),
            criterion_averaging_report(workers, seed_offset),
            criterion_max_bound(workers, seed_offset),
            criterion_martingale_residual(workers, seed_offset),
            criterion_moment_exactness(workers, seed_offset),
            criterion_determinism(workers, seed_offset)};
}

}  // namespace stoavg
