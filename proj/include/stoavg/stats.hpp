#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stoavg/common.hpp"
#include "stoavg/ensemble.hpp"
#include "stoavg/generators.hpp"

namespace stoavg {

struct TestVerdict {
    std::string name;
    double statistic = 0.0;
    double score = 0.0;  // p-value or z-score, see score_kind
    std::string score_kind = "z";
    bool pass = false;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::string detail;
};

// --- normal distribution helpers ------------------------------------------

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Acklam's rational approximation of the standard normal quantile,
// refined with one Halley step; good to ~1e-13 on (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// --- closed-form oracles ---------------------------------------------------

// Var[Int_0^t Y_{xi_r} dr] for iid Y switching at Poisson(rho) times:
//   Var[Y_0] * E[sum_k L_k^2] = Var[Y_0] * 2 (rho t - 1 + e^{-rho t}) / rho^2,
// since the interval lengths L_k given k switches are uniform spacings with
// E[sum L_k^2 | k] = 2 t^2 / (k + 2).  A series branch covers rho t -> 0,
// where the closed form cancels badly.
inline double variance_oracle(double rho, double t, double var_y) {
    if (!(rho > 0.0)) throw std::invalid_argument("variance_oracle: rho must be positive");
    if (t < 0.0) throw std::invalid_argument("variance_oracle: t must be non-negative");
    double u = rho * t;
    if (u < 1e-3) {
        double bracket = t * t * (1.0 - u / 3.0 + u * u / 12.0 - u * u * u / 60.0);
        return var_y * bracket;
    }
    double bracket = 2.0 * (u - 1.0 + std::exp(-u)) / (rho * rho);
    return var_y * bracket;
}

// Upper bound on E[max of 1 + Poisson(rho) iid non-negative draws]:
//   2 alpha + (1 + rho) E[X^p] alpha^{1-p} / (p - 1).
inline double max_bound(double alpha, double rho, double p, double pth_moment) {
    if (!(alpha > 0.0)) throw std::invalid_argument("max_bound: alpha must be positive");
    if (!(p > 1.0)) throw std::invalid_argument("max_bound: p must exceed 1");
    if (rho < 0.0) throw std::invalid_argument("max_bound: rho must be non-negative");
    if (pth_moment < 0.0) throw std::invalid_argument("max_bound: moment must be non-negative");
    return 2.0 * alpha + (1.0 + rho) * pth_moment * std::pow(alpha, 1.0 - p) / (p - 1.0);
}

// Regression (through the origin) of squared centered integrals on
// sum_k (t ^ T_{k+1} - t ^ T_k)^2; the slope recovers Var[Y_0].
inline TestVerdict conditional_variance_identity_check(
    const std::vector<SwitchingIntegral>& paths, double mean_y, double var_y, double t) {
    if (paths.size() < 10)
        throw std::invalid_argument("conditional_variance_identity_check: too few paths");
    KahanSum sxy, sxx;
    for (const auto& p : paths) {
        double y = (p.integral - mean_y * t) * (p.integral - mean_y * t);
        sxy.add(p.sum_sq_intervals * y);
        sxx.add(p.sum_sq_intervals * p.sum_sq_intervals);
    }
    double slope = sxx.value() > 0.0 ? sxy.value() / sxx.value() : 0.0;
    KahanSum srr;  // heteroskedasticity-robust slope variance
    for (const auto& p : paths) {
        double y = (p.integral - mean_y * t) * (p.integral - mean_y * t);
        double r = y - slope * p.sum_sq_intervals;
        srr.add(p.sum_sq_intervals * p.sum_sq_intervals * r * r);
    }
    double se = sxx.value() > 0.0 ? std::sqrt(srr.value()) / sxx.value() : 0.0;
    TestVerdict v;
    v.name = "conditional_variance_identity";
    v.statistic = slope;
    v.score = se > 0.0 ? (slope - var_y) / se : 0.0;
    v.pass = std::abs(v.score) <= 3.0 || (se == 0.0 && slope == var_y);
    v.samples = paths.size();
    v.detail = "slope vs Var[Y0] = " + std::to_string(var_y) + ", se = " + std::to_string(se);
    return v;
}

// --- Kolmogorov-Smirnov ---------------------------------------------------

namespace detail {

inline double ks_p_value(double lambda) {
    if (lambda < 1e-8) return 1.0;
    KahanSum s;
    double sign = 1.0;
    for (int k = 1; k <= 101; ++k) {
        double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        s.add(term);
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    double p = 2.0 * s.value();
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace detail

inline TestVerdict ks_two_sample(std::vector<double> a, std::vector<double> b,
                                 double p_threshold = 0.01) {
    if (a.size() < 100 || b.size() < 100)
        throw std::invalid_argument("ks_two_sample: need at least 100 samples each");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (ia < a.size() && ib < b.size()) {
        double xa = a[ia], xb = b[ib];
        if (xa <= xb) ++ia;
        if (xb <= xa) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    double ne = std::sqrt(na * nb / (na + nb));
    TestVerdict v;
    v.name = "ks_two_sample";
    v.statistic = d;
    v.score = detail::ks_p_value((ne + 0.12 + 0.11 / ne) * d);
    v.score_kind = "p";
    v.pass = v.score > p_threshold;
    v.samples = a.size() + b.size();
    return v;
}

inline TestVerdict ks_vs_normal(std::vector<double> a, double mean, double variance,
                                double p_threshold = 0.01) {
    if (a.size() < 100) throw std::invalid_argument("ks_vs_normal: need at least 100 samples");
    TestVerdict v;
    v.name = "ks_vs_normal";
    if (!(variance > 0.0)) {
        v.detail = "degenerate: zero variance reference";
        v.score_kind = "p";
        return v;
    }
    std::sort(a.begin(), a.end());
    double sd = std::sqrt(variance);
    double d = 0.0;
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double cdf = normal_cdf((a[i] - mean) / sd);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    double sn = std::sqrt(n);
    v.statistic = d;
    v.score = detail::ks_p_value((sn + 0.12 + 0.11 / sn) * d);
    v.score_kind = "p";
    v.pass = v.score > p_threshold;
    v.samples = a.size();
    return v;
}

// --- ensemble statistics --------------------------------------------------

struct EnsembleSummary {
    std::vector<double> times;
    std::size_t n_demes = 1;
    std::size_t n_paths = 0;
    std::vector<double> mean, variance, se;            // (time x deme), row-major
    std::vector<std::vector<double>> covariance;       // per time, deme x deme row-major

    double at_mean(std::size_t t, std::size_t d) const { return mean[t * n_demes + d]; }
    double at_var(std::size_t t, std::size_t d) const { return variance[t * n_demes + d]; }
    double at_se(std::size_t t, std::size_t d) const { return se[t * n_demes + d]; }
    double at_cov(std::size_t t, std::size_t i, std::size_t j) const {
        return covariance[t][i * n_demes + j];
    }
};

inline EnsembleSummary ensemble_summary(const Ensemble& ens) {
    EnsembleSummary s;
    s.times = ens.times;
    s.n_demes = ens.n_demes;
    s.n_paths = ens.n_paths;
    const std::size_t nt = ens.times.size(), nd = ens.n_demes, np = ens.n_paths;
    s.mean.assign(nt * nd, 0.0);
    s.variance.assign(nt * nd, 0.0);
    s.se.assign(nt * nd, 0.0);
    s.covariance.assign(nt, std::vector<double>(nd * nd, 0.0));
    if (np == 0) return s;
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t d = 0; d < nd; ++d) {
            KahanSum m;
            for (std::size_t p = 0; p < np; ++p) m.add(ens.at(p, t, d));
            s.mean[t * nd + d] = m.value() / static_cast<double>(np);
        }
        for (std::size_t i = 0; i < nd; ++i)
            for (std::size_t j = i; j < nd; ++j) {
                KahanSum c;
                for (std::size_t p = 0; p < np; ++p)
                    c.add((ens.at(p, t, i) - s.mean[t * nd + i]) *
                          (ens.at(p, t, j) - s.mean[t * nd + j]));
                double cov = np > 1 ? c.value() / static_cast<double>(np - 1) : 0.0;
                s.covariance[t][i * nd + j] = cov;
                s.covariance[t][j * nd + i] = cov;
                if (i == j) {
                    s.variance[t * nd + i] = std::max(0.0, cov);
                    s.se[t * nd + i] = std::sqrt(std::max(0.0, cov) / static_cast<double>(np));
                }
            }
    }
    return s;
}

// Standard error of a sample variance via the fourth central moment.
inline double variance_se(std::span<const double> xs) {
    const double n = static_cast<double>(xs.size());
    if (xs.size() < 4) return 0.0;
    KahanSum m;
    for (double x : xs) m.add(x);
    double mean = m.value() / n;
    KahanSum m2, m4;
    for (double x : xs) {
        double d = (x - mean) * (x - mean);
        m2.add(d);
        m4.add(d * d);
    }
    double var = m2.value() / (n - 1.0);
    double mu4 = m4.value() / n;
    double v = (mu4 - var * var * (n - 3.0) / (n - 1.0)) / n;
    return std::sqrt(std::max(0.0, v));
}

// Covariance between demes i and j at time t, with a moment-based standard
// error for its estimate.
struct CovEstimate {
    double cov = 0.0;
    double se = 0.0;
};

inline CovEstimate cross_covariance(const Ensemble& ens, std::size_t t, std::size_t i,
                                    std::size_t j) {
    const std::size_t np = ens.n_paths;
    CovEstimate out;
    if (np < 4) return out;
    KahanSum mi, mj;
    for (std::size_t p = 0; p < np; ++p) {
        mi.add(ens.at(p, t, i));
        mj.add(ens.at(p, t, j));
    }
    double mui = mi.value() / static_cast<double>(np);
    double muj = mj.value() / static_cast<double>(np);
    KahanSum c, c22;
    for (std::size_t p = 0; p < np; ++p) {
        double di = ens.at(p, t, i) - mui;
        double dj = ens.at(p, t, j) - muj;
        c.add(di * dj);
        c22.add(di * dj * di * dj);
    }
    out.cov = c.value() / static_cast<double>(np - 1);
    double mu22 = c22.value() / static_cast<double>(np);
    out.se = std::sqrt(std::max(0.0, mu22 - out.cov * out.cov) / static_cast<double>(np));
    return out;
}

// Per-time, per-deme agreement tests between two ensembles on the same grid:
// mean z-test, variance z-test (fourth-moment SE), and a two-sample KS test.
inline std::vector<TestVerdict> compare_ensembles(const Ensemble& a, const Ensemble& b,
                                                  double z_threshold = 3.0,
                                                  double ks_p_threshold = 0.01) {
    if (a.n_demes != b.n_demes) throw std::invalid_argument("compare_ensembles: deme mismatch");
    if (a.times.size() != b.times.size())
        throw std::invalid_argument("compare_ensembles: grid mismatch");
    for (std::size_t t = 0; t < a.times.size(); ++t)
        if (std::abs(a.times[t] - b.times[t]) > 1e-12)
            throw std::invalid_argument("compare_ensembles: grid mismatch");
    EnsembleSummary sa = ensemble_summary(a), sb = ensemble_summary(b);
    std::vector<TestVerdict> out;
    std::vector<double> xa(a.n_paths), xb(b.n_paths);
    for (std::size_t t = 0; t < a.times.size(); ++t)
        for (std::size_t d = 0; d < a.n_demes; ++d) {
            std::string where =
                " t=" + std::to_string(a.times[t]) + " deme=" + std::to_string(d);
            for (std::size_t p = 0; p < a.n_paths; ++p) xa[p] = a.at(p, t, d);
            for (std::size_t p = 0; p < b.n_paths; ++p) xb[p] = b.at(p, t, d);

            TestVerdict mv;
            mv.name = "mean_z" + where;
            double se = std::sqrt(sa.at_se(t, d) * sa.at_se(t, d) +
                                  sb.at_se(t, d) * sb.at_se(t, d));
            mv.statistic = sa.at_mean(t, d) - sb.at_mean(t, d);
            mv.score = se > 0.0 ? mv.statistic / se : 0.0;
            mv.pass = std::abs(mv.score) <= z_threshold || (se == 0.0 && mv.statistic == 0.0);
            mv.samples = a.n_paths + b.n_paths;
            out.push_back(mv);

            TestVerdict vv;
            vv.name = "var_z" + where;
            double vse = std::sqrt(variance_se(xa) * variance_se(xa) +
                                   variance_se(xb) * variance_se(xb));
            vv.statistic = sa.at_var(t, d) - sb.at_var(t, d);
            vv.score = vse > 0.0 ? vv.statistic / vse : 0.0;
            vv.pass = std::abs(vv.score) <= z_threshold || (vse == 0.0 && vv.statistic == 0.0);
            vv.samples = a.n_paths + b.n_paths;
            out.push_back(vv);

            TestVerdict kv = ks_two_sample(xa, xb, ks_p_threshold);
            kv.name = "ks" + where;
            out.push_back(kv);
        }
    return out;
}

// --- martingale-residual (Dynkin) test ------------------------------------

// Checks that f(X_t) - Int (Af)(X_s) ds has mean-zero increments over every
// grid interval.  Bonferroni over intervals keeps the overall level at the
// 3-sigma mark.
inline TestVerdict martingale_residual(const Ensemble& ens, const TestFunction& f,
                                       const std::function<double(std::span<const double>)>& Af,
                                       double total_alpha = 0.0027) {
    const std::size_t nt = ens.times.size(), np = ens.n_paths, nd = ens.n_demes;
    TestVerdict v;
    v.name = "martingale_residual";
    v.seed = ens.seed;
    v.samples = np;
    if (nt < 2 || np < 10) {
        v.detail = "grid too short or too few paths";
        return v;
    }
    const std::size_t m = nt - 1;
    double threshold = normal_quantile(1.0 - total_alpha / (2.0 * static_cast<double>(m)));
    double worst = 0.0;
    bool all_ok = true;
    std::vector<double> x0(nd), x1(nd);
    std::vector<double> residual(np);
    for (std::size_t t = 0; t + 1 < nt; ++t) {
        double h = ens.times[t + 1] - ens.times[t];
        for (std::size_t p = 0; p < np; ++p) {
            for (std::size_t d = 0; d < nd; ++d) {
                x0[d] = ens.at(p, t, d);
                x1[d] = ens.at(p, t + 1, d);
            }
            double integral = 0.5 * h * (Af(x0) + Af(x1));
            residual[p] = f.value(x1) - f.value(x0) - integral;
        }
        auto [mean, se] = detail::mean_se(residual);
        double z = se > 0.0 ? mean / se : 0.0;
        worst = std::max(worst, std::abs(z));
        if (std::abs(z) > threshold && se > 0.0) all_ok = false;
    }
    v.statistic = worst;
    v.score = worst;
    v.pass = all_ok;
    v.detail = "max |z| over " + std::to_string(m) +
               " intervals, threshold " + std::to_string(threshold);
    return v;
}

}  // namespace stoavg
