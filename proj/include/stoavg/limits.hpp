#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "stoavg/common.hpp"
#include "stoavg/ensemble.hpp"
#include "stoavg/lattice.hpp"
#include "stoavg/rng.hpp"

namespace stoavg {

// Parameters of the limiting interacting branching diffusion
//   dX_i = sum_j a(i,j)(X_j - X_i) dt + (alpha + sigma_e^2) X_i dt
//          + sqrt(sigma_b^2 X_i) dW_i + sqrt(2 sigma_e^2) X_i dW'
// with one Brownian motion per deme plus a single shared one.
struct SdeSpec {
    MigrationKernel kernel;
    double alpha = 0.0;
    double sigma_b2 = 0.0;
    double sigma_e2 = 0.0;

    void validate() const {
        if (sigma_b2 < 0.0 || sigma_e2 < 0.0)
            throw std::invalid_argument("SdeSpec: variances must be non-negative");
    }
};

inline std::vector<double> drift(const SdeSpec& spec, std::span<const double> x) {
    const std::size_t k = spec.kernel.size();
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double d = (spec.alpha + spec.sigma_e2) * x[i];
        for (std::size_t j = 0; j < k; ++j)
            d += spec.kernel.rate(i, j) * (x[j] - x[i]);
        out[i] = d;
    }
    return out;
}

// Instantaneous covariance of the noise: diagonal sigma_b^2 x_i + 2 sigma_e^2 x_i^2,
// off-diagonal 2 sigma_e^2 x_i x_j from the shared Brownian motion.
inline std::vector<std::vector<double>> cross_covariance_rate(const SdeSpec& spec,
                                                              std::span<const double> x) {
    const std::size_t k = spec.kernel.size();
    std::vector<std::vector<double>> cov(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            cov[i][j] = 2.0 * spec.sigma_e2 * x[i] * x[j];
            if (i == j) cov[i][j] += spec.sigma_b2 * x[i];
        }
    return cov;
}

// Explicit Euler-Maruyama with post-step clamping at 0.  The square-root
// coefficient is evaluated at max(x, 0); pre-clamp sign violations are
// counted in meta["clamped_steps"].
inline Ensemble euler_maruyama(const SdeSpec& spec, const std::vector<double>& x0,
                               double horizon, double dt, std::size_t n_paths,
                               std::uint64_t seed, const std::vector<double>& record_times = {},
                               unsigned workers = 0) {
    spec.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("euler_maruyama: dt must be positive");
    if (dt > horizon) throw StepTooLarge("euler_maruyama: dt exceeds horizon");
    if (x0.size() != spec.kernel.size())
        throw std::invalid_argument("euler_maruyama: x0/kernel deme mismatch");
    if (workers == 0) workers = default_workers();

    std::vector<double> times = record_times;
    if (times.empty()) times = {horizon};

    Ensemble ens;
    ens.times = times;
    ens.n_demes = spec.kernel.size();
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.kind = "sde";
    ens.meta["alpha"] = spec.alpha;
    ens.meta["sigma_b2"] = spec.sigma_b2;
    ens.meta["sigma_e2"] = spec.sigma_e2;
    ens.meta["dt"] = dt;
    ens.allocate();

    const std::size_t k = spec.kernel.size();
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    const double sq_dt = std::sqrt(dt);
    const double common_scale = std::sqrt(2.0 * spec.sigma_e2);
    std::vector<long> clamped(n_paths, 0);

    parallel_for(n_paths, workers, [&](std::size_t p) {
        CounterRng noise(seed, p, detail::kTiming);
        std::vector<double> x = x0;
        std::size_t rec = 0;
        double t = 0.0;
        auto record_until = [&](double now) {
            while (rec < times.size() && times[rec] <= now + 1e-12) {
                for (std::size_t d = 0; d < k; ++d) ens.at(p, rec, d) = x[d];
                ++rec;
            }
        };
        record_until(0.0 - 1e-15);  // allow a 0 record time
        for (std::size_t step = 0; step < n_steps; ++step) {
            double h = std::min(dt, horizon - t);
            std::vector<double> d = drift(spec, x);
            double shared = noise.normal();
            for (std::size_t i = 0; i < k; ++i) {
                double gi = noise.normal();
                double xi = x[i];
                xi += d[i] * h;
                xi += std::sqrt(spec.sigma_b2 * std::max(x[i], 0.0)) * sq_dt * gi;
                xi += common_scale * x[i] * sq_dt * shared;
                if (xi < 0.0) {
                    xi = 0.0;
                    ++clamped[p];
                }
                x[i] = xi;
            }
            t += h;
            record_until(t);
        }
        record_until(horizon + 1.0);
    });

    long total_clamped = 0;
    for (long c : clamped) total_clamped += c;
    ens.meta["clamped_steps"] = static_cast<double>(total_clamped);
    return ens;
}

// Exact sampling of the walker limit a t + sigma W_t on the given times.
inline Ensemble walker_limit_sample(double a, double sigma, const std::vector<double>& times,
                                    std::size_t n_paths, std::uint64_t seed,
                                    unsigned workers = 0) {
    if (sigma < 0.0) throw std::invalid_argument("walker_limit_sample: sigma must be >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("walker_limit_sample: times must increase");
    if (workers == 0) workers = default_workers();

    Ensemble ens;
    ens.times = times;
    ens.n_demes = 1;
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.kind = "walker-limit";
    ens.meta["a"] = a;
    ens.meta["sigma"] = sigma;
    ens.allocate();

    parallel_for(n_paths, workers, [&](std::size_t p) {
        CounterRng noise(seed, p, detail::kTiming);
        double w = 0.0;
        double prev = 0.0;
        for (std::size_t t = 0; t < times.size(); ++t) {
            double gap = times[t] - prev;
            w += std::sqrt(gap) * noise.normal();
            prev = times[t];
            ens.at(p, t, 0) = a * times[t] + sigma * w;
        }
    });
    return ens;
}

}  // namespace stoavg
