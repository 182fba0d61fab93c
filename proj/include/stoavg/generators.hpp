#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stoavg/common.hpp"
#include "stoavg/env.hpp"
#include "stoavg/lattice.hpp"
#include "stoavg/limits.hpp"
#include "stoavg/simulate.hpp"

namespace stoavg {

using StateFn = std::function<double(std::span<const double>)>;

// Twice-differentiable test function with analytic derivatives on its
// active coordinates (zero elsewhere).
struct TestFunction {
    std::vector<std::size_t> active;
    StateFn value;
    std::function<double(std::size_t, std::span<const double>)> grad;
    std::function<double(std::size_t, std::size_t, std::span<const double>)> hess;
    double bound = 0.0;
};

namespace detail {

inline double pw(double x, int e) {
    if (e == 0) return 1.0;
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

}  // namespace detail

// f(x) = prod_i x_i^{e_i} * exp(-decay * sum_i x_i^2) over the active block.
// decay = 0 gives a plain monomial (used where compact support is not needed).
inline TestFunction poly_bump(std::vector<std::size_t> active, std::vector<int> exponents,
                              double decay = 0.0, double bound = 1.0) {
    if (active.size() != exponents.size())
        throw std::invalid_argument("poly_bump: active/exponents mismatch");

    auto mono = [active, exponents](std::span<const double> x) {
        double g = 1.0;
        for (std::size_t a = 0; a < active.size(); ++a)
            g *= detail::pw(x[active[a]], exponents[a]);
        return g;
    };
    auto dmono = [active, exponents](std::size_t which, std::span<const double> x) {
        double g = 1.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            double xi = x[active[a]];
            int e = exponents[a];
            if (a == which) {
                if (e == 0) return 0.0;
                g *= e * detail::pw(xi, e - 1);
            } else {
                g *= detail::pw(xi, e);
            }
        }
        return g;
    };
    auto d2mono = [active, exponents](std::size_t wa, std::size_t wb,
                                      std::span<const double> x) {
        double g = 1.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            double xi = x[active[a]];
            int e = exponents[a];
            int order = (a == wa ? 1 : 0) + (a == wb ? 1 : 0);
            if (order == 0) {
                g *= detail::pw(xi, e);
            } else if (order == 1) {
                if (e == 0) return 0.0;
                g *= e * detail::pw(xi, e - 1);
            } else {
                if (e < 2) return 0.0;
                g *= e * (e - 1) * detail::pw(xi, e - 2);
            }
        }
        return g;
    };
    auto gauss = [active, decay](std::span<const double> x) {
        if (decay == 0.0) return 1.0;
        double s = 0.0;
        for (std::size_t a : active) s += x[a] * x[a];
        return std::exp(-decay * s);
    };

    TestFunction f;
    f.active = active;
    f.bound = bound;
    f.value = [mono, gauss](std::span<const double> x) { return mono(x) * gauss(x); };
    f.grad = [active, mono, dmono, gauss, decay](std::size_t i, std::span<const double> x) {
        std::size_t which = active.size();
        for (std::size_t a = 0; a < active.size(); ++a)
            if (active[a] == i) which = a;
        if (which == active.size()) return 0.0;
        double h = gauss(x);
        return h * (dmono(which, x) - 2.0 * decay * x[i] * mono(x));
    };
    f.hess = [active, mono, dmono, d2mono, gauss, decay](std::size_t i, std::size_t j,
                                                         std::span<const double> x) {
        std::size_t wa = active.size(), wb = active.size();
        for (std::size_t a = 0; a < active.size(); ++a) {
            if (active[a] == i) wa = a;
            if (active[a] == j) wb = a;
        }
        if (wa == active.size() || wb == active.size()) return 0.0;
        double h = gauss(x);
        double g = mono(x);
        double gi = dmono(wa, x);
        double gj = dmono(wb, x);
        double gij = d2mono(wa, wb, x);
        double out = gij - 2.0 * decay * (x[j] * gi + x[i] * gj) +
                     4.0 * decay * decay * x[i] * x[j] * g;
        if (i == j) out -= 2.0 * decay * g;
        return h * out;
    };
    return f;
}

inline TestFunction add(const TestFunction& a, const TestFunction& b, double ca = 1.0,
                        double cb = 1.0) {
    TestFunction f;
    f.active = a.active;
    for (std::size_t i : b.active)
        if (std::find(f.active.begin(), f.active.end(), i) == f.active.end())
            f.active.push_back(i);
    f.bound = ca * a.bound + cb * b.bound;
    f.value = [=](std::span<const double> x) { return ca * a.value(x) + cb * b.value(x); };
    f.grad = [=](std::size_t i, std::span<const double> x) {
        return ca * a.grad(i, x) + cb * b.grad(i, x);
    };
    f.hess = [=](std::size_t i, std::size_t j, std::span<const double> x) {
        return ca * a.hess(i, j, x) + cb * b.hess(i, j, x);
    };
    return f;
}

// --- the BRWRE generator triple (theta_n = n) -----------------------------

// L_0,n f(x) = n sum_{i,j} a(j,i) x_i [f(x - e_i/n + e_j/n) - f(x)]
inline double apply_L0(const StateFn& f, std::span<const double> x, long n,
                       const MigrationKernel& kernel) {
    const std::size_t k = kernel.size();
    const double step = 1.0 / static_cast<double>(n);
    std::vector<double> y(x.begin(), x.end());
    double fx = f(y);
    KahanSum s;
    for (std::size_t i = 0; i < k; ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) {
            double a = kernel.rate(j, i);
            if (a == 0.0) continue;
            y[i] = x[i] - step;
            y[j] = (i == j) ? y[i] : x[j] + step;
            double shifted = f(y);
            y[i] = x[i];
            y[j] = x[j];
            s.add(static_cast<double>(n) * a * x[i] * (shifted - fx));
        }
    }
    return s.value();
}

// L_1,n f(x, z) = n sum_i sum_l x_i [f(x + (l-1)/n e_i) - f(x)] z(l)
inline double apply_L1(const StateFn& f, std::span<const double> x, const OffspringLaw& z,
                       long n) {
    const double step = 1.0 / static_cast<double>(n);
    std::vector<double> y(x.begin(), x.end());
    double fx = f(y);
    KahanSum s;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        for (const auto& [l, p] : z.probs) {
            if (l == 1 || p == 0.0) continue;
            y[i] = x[i] + static_cast<double>(l - 1) * step;
            double shifted = f(y);
            y[i] = x[i];
            s.add(static_cast<double>(n) * x[i] * (shifted - fx) * p);
        }
    }
    return s.value();
}

// L_2,n f(x, z) = E[f(x, Z_0^n)] - f(x, z): jump to a fresh draw.
using StateEnvFn = std::function<double(std::span<const double>, const OffspringLaw&)>;

inline double apply_L2(const StateEnvFn& f, std::span<const double> x, const OffspringLaw& z,
                       const EnvironmentLaw& env) {
    double mean = env.expect([&](const OffspringLaw& y) { return f(x, y); });
    return mean - f(x, z);
}

// L_1,n (L_1,n f): the operator whose environment average carries the
// sigma_e^2 part of the limit.
inline double iterated_L1(const StateFn& f, std::span<const double> x, const OffspringLaw& z,
                          long n) {
    StateFn inner = [&](std::span<const double> y) { return apply_L1(f, y, z, n); };
    return apply_L1(inner, x, z, n);
}

// Averaged operators of the limit:
//   A_1 f = sum_{ij} a(i,j)(x_j - x_i) d_i f + alpha sum_i x_i d_i f
//           + sigma_b^2/2 sum_i x_i d_ii f
//   A_2 f(x, r) = r (sum_i x_i d_i f + sum_{ij} x_i x_j d_ij f)
inline double A1(const TestFunction& f, std::span<const double> x, const SdeSpec& spec) {
    KahanSum s;
    for (std::size_t i : f.active) {
        double gi = f.grad(i, x);
        double mig = 0.0;
        for (std::size_t j = 0; j < spec.kernel.size(); ++j)
            mig += spec.kernel.rate(i, j) * (x[j] - x[i]);
        s.add(mig * gi);
        s.add(spec.alpha * x[i] * gi);
        s.add(0.5 * spec.sigma_b2 * x[i] * f.hess(i, i, x));
    }
    return s.value();
}

inline double A2(const TestFunction& f, std::span<const double> x, double r) {
    KahanSum s;
    for (std::size_t i : f.active) {
        s.add(x[i] * f.grad(i, x));
        for (std::size_t j : f.active) s.add(x[i] * x[j] * f.hess(i, j, x));
    }
    return r * s.value();
}

// | L_2,n h_n (x,z) - ( E_pi[L_1,n f(x, .)] - L_1,n f(x,z) ) | with
// h_n = L_1,n f.  Structural identity of the fresh-draw L_2; must vanish.
inline double poisson_identity_residual(const StateFn& f, std::span<const double> x,
                                        const OffspringLaw& z, const EnvironmentLaw& env,
                                        long n) {
    StateEnvFn h = [&](std::span<const double> y, const OffspringLaw& w) {
        return apply_L1(f, y, w, n);
    };
    double lhs = apply_L2(h, x, z, env);
    double mean = env.expect([&](const OffspringLaw& y) { return apply_L1(f, x, y, n); });
    double rhs = mean - apply_L1(f, x, z, n);
    return std::abs(lhs - rhs);
}

// --- walker generators (introduction example) -----------------------------

struct WalkerFunction {
    std::function<double(double, double)> value;  // f(x, z)
    std::function<double(double, double)> ddx;    // df/dx(x, z)
};

inline std::pair<double, double> walker_generators(const WalkerFunction& f, double x, double z,
                                                   const SpeedLaw& pi_n) {
    double l1 = z * f.ddx(x, z);
    KahanSum mean;
    for (std::size_t i = 0; i < pi_n.values.size(); ++i)
        mean.add(pi_n.probs[i] * f.value(x, pi_n.values[i]));
    double l2 = mean.value() - f.value(x, z);
    return {l1, l2};
}

// --- numerical check of the averaging-theorem hypotheses ------------------

struct AveragingQuantities {
    long n = 0;
    double h_sup_mean = 0.0, h_sup_se = 0.0;    // E[sup_s |h_n(X,Z)| / n]
    double a1_gap_sup = 0.0;                    // sup_x |A1 f - E_pi[(n L1 + L0) f]|
    double a2_gap_mean = 0.0, a2_gap_se = 0.0;  // E Int |A2 f(X, g_n(Z)) - (L1 h + L0 h / n)|
    double lp_mean = 0.0, lp_se = 0.0;          // Int E |A2 f(X, g_n(Z))|^{p/2}
    double poisson_residual_max = 0.0;
    std::size_t paths = 0;
    std::size_t grid_size = 0;
};

struct AveragingReport {
    std::vector<AveragingQuantities> rows;
    double p = 4.0;
    double alpha = 0.0, sigma_b2 = 0.0, sigma_e2 = 0.0;  // inferred limit parameters
    double slope_h_sup = 0.0, slope_a1_gap = 0.0, slope_a2_gap = 0.0;  // log-log vs n
};

namespace detail {

inline double loglog_slope(const std::vector<double>& ns, const std::vector<double>& qs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(qs[i] > 0.0)) continue;
        double lx = std::log(ns[i]), ly = std::log(qs[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) return 0.0;
    double denom = m * sxx - sx * sx;
    return denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
}

inline std::pair<double, double> mean_se(const std::vector<double>& v) {
    KahanSum s;
    for (double x : v) s.add(x);
    double m = s.value() / static_cast<double>(v.size());
    KahanSum q;
    for (double x : v) q.add((x - m) * (x - m));
    double var = v.size() > 1 ? q.value() / static_cast<double>(v.size() - 1) : 0.0;
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace detail

// Monte Carlo estimates, per n, of the hypotheses of the averaging theorem
// under the fixed choice f_n = f, h_n = L_1,n f.  The sup in the A1 gap is
// deterministic, taken over the provided `state_grid` only.
inline AveragingReport averaging_condition_report(
    const TestFunction& f, const MigrationKernel& kernel,
    const std::function<EnvironmentLaw(long)>& env_family, const std::vector<long>& n_list,
    double horizon, std::size_t n_paths, std::uint64_t seed,
    const std::vector<std::vector<double>>& state_grid, const std::vector<double>& x0_scaled,
    double p = 4.0, std::size_t time_samples = 33) {
    AveragingReport report;
    report.p = p;

    // limit parameters read off the family at a large reference scale
    const long n_ref = 1'000'000;
    MomentReport ref = moment_report(env_family(n_ref), p);
    report.alpha = ref.drift_n;
    report.sigma_e2 = ref.var_m;
    report.sigma_b2 = ref.mean_v;
    SdeSpec limit{kernel, report.alpha, report.sigma_b2, report.sigma_e2};

    std::vector<double> grid(time_samples);
    for (std::size_t i = 0; i < time_samples; ++i)
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(time_samples - 1);

    for (long n : n_list) {
        EnvironmentLaw env = env_family(n);
        AveragingQuantities row;
        row.n = n;
        row.paths = n_paths;
        row.grid_size = state_grid.size();

        ParticleState x0;
        x0.n = n;
        x0.counts.resize(kernel.size());
        for (std::size_t d = 0; d < kernel.size(); ++d)
            x0.counts[d] = static_cast<long long>(std::llround(x0_scaled[d] * n));

        std::vector<double> h_sup(n_paths), a2_gap(n_paths), lp_val(n_paths);
        for (std::size_t pth = 0; pth < n_paths; ++pth) {
            Path path = simulate_brwre(kernel, env, x0, horizon, grid, seed, pth);
            std::size_t env_pos = 0;
            double sup_h = 0.0;
            std::vector<double> a2_vals(grid.size()), lp_vals(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                while (env_pos + 1 < path.env_trace.size() &&
                       path.env_trace[env_pos + 1].time <= grid[g])
                    ++env_pos;
                const OffspringLaw& z =
                    env.atoms[static_cast<std::size_t>(path.env_trace[env_pos].atom)].law;
                std::span<const double> x = path.samples[g].state;
                double h = apply_L1(f.value, x, z, n);
                sup_h = std::max(sup_h, std::abs(h) / static_cast<double>(n));
                double a2 = A2(f, x, stoavg::g_n(z));
                StateFn h_fixed_z = [&](std::span<const double> y) {
                    return apply_L1(f.value, y, z, n);
                };
                double l1h = iterated_L1(f.value, x, z, n);
                double l0h = apply_L0(h_fixed_z, x, n, kernel);
                a2_vals[g] = std::abs(a2 - (l1h + l0h / static_cast<double>(n)));
                lp_vals[g] = std::pow(std::abs(a2), p / 2.0);
            }
            // trapezoid in time
            KahanSum ia, il;
            for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
                double h2 = 0.5 * (grid[g + 1] - grid[g]);
                ia.add(h2 * (a2_vals[g] + a2_vals[g + 1]));
                il.add(h2 * (lp_vals[g] + lp_vals[g + 1]));
            }
            h_sup[pth] = sup_h;
            a2_gap[pth] = ia.value();
            lp_val[pth] = il.value();
        }
        std::tie(row.h_sup_mean, row.h_sup_se) = detail::mean_se(h_sup);
        std::tie(row.a2_gap_mean, row.a2_gap_se) = detail::mean_se(a2_gap);
        std::tie(row.lp_mean, row.lp_se) = detail::mean_se(lp_val);

        auto a1_gap = [&](std::span<const double> x) {
            double mean = env.expect([&](const OffspringLaw& z) {
                return static_cast<double>(n) * apply_L1(f.value, x, z, n);
            });
            mean += apply_L0(f.value, x, n, kernel);
            return std::abs(A1(f, x, limit) - mean);
        };
        for (const auto& x : state_grid) row.a1_gap_sup = std::max(row.a1_gap_sup, a1_gap(x));

        for (const auto& x : state_grid)
            for (const auto& atom : env.atoms)
                row.poisson_residual_max = std::max(
                    row.poisson_residual_max,
                    poisson_identity_residual(f.value, x, atom.law, env, n));

        report.rows.push_back(row);
    }

    std::vector<double> ns, q1, q2, q3;
    for (const auto& r : report.rows) {
        ns.push_back(static_cast<double>(r.n));
        q1.push_back(r.h_sup_mean);
        q2.push_back(r.a1_gap_sup);
        q3.push_back(r.a2_gap_mean);
    }
    report.slope_h_sup = detail::loglog_slope(ns, q1);
    report.slope_a1_gap = detail::loglog_slope(ns, q2);
    report.slope_a2_gap = detail::loglog_slope(ns, q3);
    return report;
}

}  // namespace stoavg
