#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stoavg/common.hpp"

namespace stoavg {

// Finite-support offspring distribution on the non-negative integers.
// All expectations against it are exact finite sums.
struct OffspringLaw {
    std::vector<std::pair<long, double>> probs;  // (k, p), k sorted and distinct

    void validate() const {
        if (probs.empty()) throw std::invalid_argument("OffspringLaw: empty support");
        KahanSum total;
        long prev = -1;
        for (const auto& [k, p] : probs) {
            if (k < 0) throw std::invalid_argument("OffspringLaw: negative support point");
            if (k <= prev) throw std::invalid_argument("OffspringLaw: support not sorted/distinct");
            if (p < 0.0) throw std::invalid_argument("OffspringLaw: negative probability");
            prev = k;
            total.add(p);
        }
        if (std::abs(total.value() - 1.0) > 1e-12)
            throw std::invalid_argument("OffspringLaw: probabilities sum to " +
                                        std::to_string(total.value()));
    }
};

inline OffspringLaw delta_law(long k) { return OffspringLaw{{{k, 1.0}}}; }

inline double offspring_mean(const OffspringLaw& law) {
    KahanSum s;
    for (const auto& [k, p] : law.probs) s.add(static_cast<double>(k) * p);
    return s.value();
}

inline double offspring_second_moment(const OffspringLaw& law) {
    KahanSum s;
    for (const auto& [k, p] : law.probs)
        s.add(static_cast<double>(k) * static_cast<double>(k) * p);
    return s.value();
}

inline double offspring_variance(const OffspringLaw& law) {
    double m = offspring_mean(law);
    double v = offspring_second_moment(law) - m * m;
    return v < 0.0 ? 0.0 : v;  // clamp rounding residue
}

// g_n(z) = (m(z) - 1)^2, the squared mean gap driving the environmental noise
inline double g_n(const OffspringLaw& law) {
    double gap = offspring_mean(law) - 1.0;
    return gap * gap;
}

// Finite mixture of offspring laws: the distribution of the environment at
// scale n. The environment clock runs at rate n^2 / beta^2.
struct EnvironmentLaw {
    struct Atom {
        OffspringLaw law;
        double weight;
    };
    std::vector<Atom> atoms;
    long n = 1;
    double beta = 1.0;

    void validate() const {
        if (atoms.empty()) throw std::invalid_argument("EnvironmentLaw: no atoms");
        if (n < 1) throw std::invalid_argument("EnvironmentLaw: n must be positive");
        if (!(beta > 0.0)) throw std::invalid_argument("EnvironmentLaw: beta must be positive");
        KahanSum total;
        for (const auto& a : atoms) {
            if (a.weight < 0.0) throw std::invalid_argument("EnvironmentLaw: negative weight");
            a.law.validate();
            total.add(a.weight);
        }
        if (std::abs(total.value() - 1.0) > 1e-12)
            throw std::invalid_argument("EnvironmentLaw: weights sum to " +
                                        std::to_string(total.value()));
    }

    double switch_rate() const {
        double nn = static_cast<double>(n);
        return nn * nn / (beta * beta);
    }

    // E[phi(Z_0^n)] as an exact mixture sum
    template <typename Fn>
    double expect(Fn&& phi) const {
        KahanSum s;
        for (const auto& a : atoms) s.add(a.weight * phi(a.law));
        return s.value();
    }
};

struct MomentReport {
    double drift_n;      // n * E[m(Z) - 1]
    double var_m;        // Var(m(Z))
    double mean_v;       // E[v(Z)]
    double pth_moment;   // E[(m(Z) - 1)^p]
    double p;
};

inline MomentReport moment_report(const EnvironmentLaw& env, double p) {
    env.validate();
    if (!(p > 2.0)) throw std::invalid_argument("moment_report: p must exceed 2");
    double mean_gap = env.expect([](const OffspringLaw& z) { return offspring_mean(z) - 1.0; });
    double gap_sq = env.expect([](const OffspringLaw& z) {
        double g = offspring_mean(z) - 1.0;
        return g * g;
    });
    MomentReport r;
    r.drift_n = static_cast<double>(env.n) * mean_gap;
    r.var_m = std::max(0.0, gap_sq - mean_gap * mean_gap);
    r.mean_v = env.expect([](const OffspringLaw& z) { return offspring_variance(z); });
    r.pth_moment = env.expect([p](const OffspringLaw& z) {
        return std::pow(offspring_mean(z) - 1.0, p);
    });
    r.p = p;
    return r;
}

// Two-atom environment on support {0, 2} with P(z(0) = 1/2 - alpha/(2n) +- sigma_e/2,
// z(2) = 1/2 + alpha/(2n) -+ sigma_e/2) = 1/2.  The pairing keeps
// z(0) + z(2) = 1 within each atom; the branch means are 1 + alpha/n -+ sigma_e.
inline EnvironmentLaw two_point_environment(double alpha, double sigma_e, long n,
                                            double beta = 1.0) {
    if (sigma_e < 0.0 || sigma_e >= 1.0)
        throw std::invalid_argument("two_point_environment: sigma_e must be in [0, 1)");
    if (n < 1) throw std::invalid_argument("two_point_environment: n must be positive");
    EnvironmentLaw env;
    env.n = n;
    env.beta = beta;
    for (double sign : {+1.0, -1.0}) {
        double z0 = 0.5 - alpha / (2.0 * n) + sign * sigma_e / 2.0;
        double z2 = 0.5 + alpha / (2.0 * n) - sign * sigma_e / 2.0;
        if (z0 < 0.0 || z0 > 1.0 || z2 < 0.0 || z2 > 1.0)
            throw std::invalid_argument(
                "two_point_environment: branch probability outside [0,1]; "
                "need n >= |alpha| / (1 - sigma_e)");
        env.atoms.push_back({OffspringLaw{{{0, z0}, {2, z2}}}, 0.5});
    }
    env.validate();
    return env;
}

// Three-point offspring law on {0, 1, 2} with prescribed mean and variance.
inline OffspringLaw three_point_law(double mean, double variance) {
    double p2 = (variance + mean * mean - mean) / 2.0;
    double p1 = mean - 2.0 * p2;
    double p0 = 1.0 - p1 - p2;
    OffspringLaw law{{{0, p0}, {1, p1}, {2, p2}}};
    law.validate();
    return law;
}

// Two-atom environment whose branch means are 1 +- sigma_e + alpha/n and whose
// branch variances differ (v_plus != v_minus correlates m and v, which keeps
// the first-order term of the iterated-generator expansion alive).
inline EnvironmentLaw correlated_environment(double alpha, double sigma_e, double v_plus,
                                             double v_minus, long n, double beta = 1.0) {
    EnvironmentLaw env;
    env.n = n;
    env.beta = beta;
    env.atoms.push_back({three_point_law(1.0 + sigma_e + alpha / n, v_plus), 0.5});
    env.atoms.push_back({three_point_law(1.0 - sigma_e + alpha / n, v_minus), 0.5});
    env.validate();
    return env;
}

inline EnvironmentLaw single_atom_environment(OffspringLaw law, long n, double beta = 1.0) {
    EnvironmentLaw env;
    env.atoms.push_back({std::move(law), 1.0});
    env.n = n;
    env.beta = beta;
    env.validate();
    return env;
}

}  // namespace stoavg
