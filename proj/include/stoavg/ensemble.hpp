#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stoavg/common.hpp"
#include "stoavg/simulate.hpp"

namespace stoavg {

// Dense grid view of many paths: data[path][time][deme].  Paths are filled
// into preallocated slots by index, so worker count cannot change the result.
struct Ensemble {
    std::vector<double> times;
    std::size_t n_demes = 1;
    std::size_t n_paths = 0;
    std::vector<double> data;
    std::uint64_t seed = 0;
    std::string kind;
    std::map<std::string, double> meta;

    double& at(std::size_t p, std::size_t t, std::size_t d) {
        return data[(p * times.size() + t) * n_demes + d];
    }
    double at(std::size_t p, std::size_t t, std::size_t d) const {
        return data[(p * times.size() + t) * n_demes + d];
    }

    void allocate() { data.assign(n_paths * times.size() * n_demes, 0.0); }
};

inline Ensemble brwre_ensemble(const MigrationKernel& kernel, const EnvironmentLaw& env,
                               const ParticleState& x0, double horizon,
                               const std::vector<double>& grid, std::size_t n_paths,
                               std::uint64_t seed, unsigned workers = 0,
                               long long population_cap = 100'000'000) {
    if (workers == 0) workers = default_workers();
    Ensemble ens;
    ens.times = grid;
    ens.n_demes = kernel.size();
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.kind = "brwre";
    ens.meta["n"] = static_cast<double>(x0.n);
    ens.allocate();
    parallel_for(n_paths, workers, [&](std::size_t p) {
        Path path = simulate_brwre(kernel, env, x0, horizon, grid, seed, p, population_cap,
                                   /*record_env=*/false);
        for (std::size_t t = 0; t < grid.size(); ++t)
            for (std::size_t d = 0; d < ens.n_demes; ++d)
                ens.at(p, t, d) = path.samples[t].state[d];
    });
    return ens;
}

inline Ensemble walker_ensemble(const SpeedLaw& pi_n, long n, double horizon,
                                const std::vector<double>& grid, std::size_t n_paths,
                                std::uint64_t seed, unsigned workers = 0) {
    if (workers == 0) workers = default_workers();
    Ensemble ens;
    ens.times = grid;
    ens.n_demes = 1;
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.kind = "walker";
    ens.meta["n"] = static_cast<double>(n);
    ens.allocate();
    parallel_for(n_paths, workers, [&](std::size_t p) {
        Path path = simulate_speed_walker(pi_n, n, horizon, grid, seed, p);
        for (std::size_t t = 0; t < grid.size(); ++t) ens.at(p, t, 0) = path.samples[t].state[0];
    });
    return ens;
}

}  // namespace stoavg
