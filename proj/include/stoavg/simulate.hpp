#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stoavg/common.hpp"
#include "stoavg/env.hpp"
#include "stoavg/lattice.hpp"
#include "stoavg/rng.hpp"

namespace stoavg {

// Population nX^n as per-deme counts.  Division by n happens only at
// observation time, so recorded states sit on the 1/n lattice exactly.
struct ParticleState {
    std::vector<long long> counts;
    long n = 1;
    double time = 0.0;
};

struct PathSample {
    double time;
    std::vector<double> state;  // scaled, counts / n
};

struct EnvSwitch {
    double time;
    int atom;  // index into the environment's atoms (or a speed law's support)
};

struct Path {
    std::vector<PathSample> samples;
    std::vector<EnvSwitch> env_trace;
    std::uint64_t seed = 0;
    long n = 1;
    double horizon = 0.0;
    std::optional<double> extinction_time;
};

namespace detail {

// stream channels per path
enum Channel : std::uint64_t {
    kTiming = 0,
    kSelection = 1,
    kOffspring = 2,
    kEnvironment = 3,
};

inline std::size_t pick_weighted_count(std::span<const long long> counts, long long total,
                                       double u) {
    long long target = static_cast<long long>(u * static_cast<double>(total));
    if (target >= total) target = total - 1;
    long long acc = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        acc += counts[i];
        if (target < acc) return i;
    }
    return counts.size() - 1;
}

}  // namespace detail

// Event-driven (Gillespie) simulation of the scaled BRWRE.  Per individual
// in deme i: migration to deme j at rate a(j, i), replacement by k offspring
// at rate n with probability z(k); the whole environment is redrawn from the
// mixture at rate n^2 / beta^2.  Grid samples record the state at the grid
// time (the cadlag value, i.e. just before the next event).
inline Path simulate_brwre(const MigrationKernel& kernel, const EnvironmentLaw& env,
                           const ParticleState& x0, double horizon,
                           const std::vector<double>& grid, std::uint64_t seed,
                           std::uint64_t path_index = 0,
                           long long population_cap = 100'000'000,
                           bool record_env = true) {
    env.validate();
    if (x0.counts.size() != kernel.size())
        throw std::invalid_argument("simulate_brwre: state/kernel deme mismatch");
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate_brwre: horizon must be positive");
    for (double g : grid)
        if (g < 0.0 || g > horizon)
            throw std::invalid_argument("simulate_brwre: grid point outside [0, horizon]");

    const long n = x0.n;
    const double scale = static_cast<double>(n);
    const double env_rate = env.switch_rate();
    const std::size_t k = kernel.size();

    CounterRng timing(seed, path_index, detail::kTiming);
    CounterRng selection(seed, path_index, detail::kSelection);
    CounterRng offspring_rng(seed, path_index, detail::kOffspring);
    CounterRng env_rng(seed, path_index, detail::kEnvironment);

    std::vector<double> atom_weights;
    atom_weights.reserve(env.atoms.size());
    for (const auto& a : env.atoms) atom_weights.push_back(a.weight);

    Path path;
    path.seed = seed;
    path.n = n;
    path.horizon = horizon;
    path.samples.reserve(grid.size());

    std::vector<long long> counts = x0.counts;
    long long total = 0;
    for (long long c : counts) {
        if (c < 0) throw std::invalid_argument("simulate_brwre: negative count");
        total += c;
    }

    std::size_t atom = env_rng.categorical(atom_weights);
    if (record_env) path.env_trace.push_back({0.0, static_cast<int>(atom)});

    std::vector<double> offspring_probs;
    const OffspringLaw* current_law = &env.atoms[atom].law;
    auto reload_offspring = [&] {
        offspring_probs.clear();
        for (const auto& [kk, p] : current_law->probs) offspring_probs.push_back(p);
    };
    reload_offspring();

    double t = 0.0;
    std::size_t grid_pos = 0;
    auto emit_until = [&](double event_time) {
        while (grid_pos < grid.size() && grid[grid_pos] < event_time) {
            PathSample s;
            s.time = grid[grid_pos];
            s.state.resize(k);
            for (std::size_t i = 0; i < k; ++i)
                s.state[i] = static_cast<double>(counts[i]) / scale;
            path.samples.push_back(std::move(s));
            ++grid_pos;
        }
    };

    if (total == 0) path.extinction_time = 0.0;

    while (true) {
        const bool extinct = (total == 0);
        const double particle_rate = extinct ? 0.0
                                             : static_cast<double>(total) * (scale + kernel.mu);
        const double rate_total = particle_rate + (record_env || !extinct ? env_rate : 0.0);
        if (rate_total <= 0.0) {
            t = horizon;
            break;
        }
        double dt = timing.exponential(rate_total);
        double next = t + dt;
        if (next > horizon) {
            t = horizon;
            break;
        }
        emit_until(next);
        t = next;

        double u = selection.uniform() * rate_total;
        if (u < env_rate && (record_env || !extinct)) {
            atom = env_rng.categorical(atom_weights);
            current_law = &env.atoms[atom].law;
            reload_offspring();
            if (record_env) path.env_trace.push_back({t, static_cast<int>(atom)});
            continue;
        }
        if (extinct) continue;

        // individual event: branching with probability n / (n + mu)
        double v = selection.uniform();
        std::size_t deme = detail::pick_weighted_count(counts, total, selection.uniform());
        if (v * (scale + kernel.mu) < scale) {
            long kids = current_law->probs[offspring_rng.categorical(offspring_probs)].first;
            counts[deme] += kids - 1;
            total += kids - 1;
            if (total > population_cap)
                throw PopulationOverflow("simulate_brwre: population " + std::to_string(total) +
                                         " exceeds cap " + std::to_string(population_cap));
            if (total == 0 && !path.extinction_time) path.extinction_time = t;
        } else {
            // migration: target deme j with probability a(j, deme) / mu
            double w = selection.uniform() * kernel.mu;
            double acc = 0.0;
            std::size_t target = k - 1;
            for (std::size_t j = 0; j + 1 < k; ++j) {
                acc += kernel.rate(j, deme);
                if (w < acc) {
                    target = j;
                    break;
                }
            }
            counts[deme] -= 1;
            counts[target] += 1;
        }
    }
    emit_until(horizon + 1.0);  // flush remaining grid points (grid may include horizon)
    return path;
}

// --- random-speed walker --------------------------------------------------

// Finite law on the reals, the speed distribution pi_n.
struct SpeedLaw {
    std::vector<double> values;
    std::vector<double> probs;

    void validate() const {
        if (values.empty() || values.size() != probs.size())
            throw std::invalid_argument("SpeedLaw: values/probs mismatch");
        KahanSum total;
        for (double p : probs) {
            if (p < 0.0) throw std::invalid_argument("SpeedLaw: negative probability");
            total.add(p);
        }
        if (std::abs(total.value() - 1.0) > 1e-12)
            throw std::invalid_argument("SpeedLaw: probabilities sum to " +
                                        std::to_string(total.value()));
    }

    double mean() const {
        KahanSum s;
        for (std::size_t i = 0; i < values.size(); ++i) s.add(values[i] * probs[i]);
        return s.value();
    }
    double variance() const {
        double m = mean();
        KahanSum s;
        for (std::size_t i = 0; i < values.size(); ++i)
            s.add((values[i] - m) * (values[i] - m) * probs[i]);
        return s.value();
    }
};

// Integral of the piecewise-constant switching process Y over [0, t]:
// fresh iid draws from `law` at Poisson(rho) times, exact piecewise-linear
// integration.  Also returns sum_k (t ^ T_{k+1} - t ^ T_k)^2, the quantity
// in the conditional variance identity.
struct SwitchingIntegral {
    double integral = 0.0;
    double sum_sq_intervals = 0.0;
    long n_switches = 0;
};

inline SwitchingIntegral switching_integral(const SpeedLaw& law, double rho, double t,
                                            CounterRng& timing, CounterRng& draws) {
    SwitchingIntegral out;
    KahanSum integral;
    KahanSum sq;
    double s = 0.0;
    double y = law.values[draws.categorical(law.probs)];
    while (true) {
        double gap = rho > 0.0 ? timing.exponential(rho) : t - s + 1.0;
        double end = std::min(t, s + gap);
        integral.add(y * (end - s));
        sq.add((end - s) * (end - s));
        if (s + gap >= t) break;
        s += gap;
        y = law.values[draws.categorical(law.probs)];
        ++out.n_switches;
    }
    out.integral = integral.value();
    out.sum_sq_intervals = sq.value();
    return out;
}

// X_t^n = n * Integral_0^t Z_s^n ds with Z switching at Poisson(n^2) times.
// No time-discretization: X is integrated segment by segment.
inline Path simulate_speed_walker(const SpeedLaw& pi_n, long n, double horizon,
                                  const std::vector<double>& grid, std::uint64_t seed,
                                  std::uint64_t path_index = 0) {
    pi_n.validate();
    if (!(horizon > 0.0))
        throw std::invalid_argument("simulate_speed_walker: horizon must be positive");
    const double rho = static_cast<double>(n) * static_cast<double>(n);
    CounterRng timing(seed, path_index, detail::kTiming);
    CounterRng draws(seed, path_index, detail::kEnvironment);

    Path path;
    path.seed = seed;
    path.n = n;
    path.horizon = horizon;

    KahanSum x;  // accumulates n * integral
    double t = 0.0;
    std::size_t idx = draws.categorical(pi_n.probs);
    path.env_trace.push_back({0.0, static_cast<int>(idx)});
    std::size_t grid_pos = 0;

    while (true) {
        double gap = timing.exponential(rho);
        double seg_end = std::min(horizon, t + gap);
        double speed = pi_n.values[idx];
        while (grid_pos < grid.size() && grid[grid_pos] <= seg_end) {
            double g = grid[grid_pos];
            double value = x.value() + static_cast<double>(n) * speed * (g - t);
            path.samples.push_back({g, {value}});
            ++grid_pos;
        }
        x.add(static_cast<double>(n) * speed * (seg_end - t));
        t = seg_end;
        if (t >= horizon) break;
        idx = draws.categorical(pi_n.probs);
        path.env_trace.push_back({t, static_cast<int>(idx)});
    }
    return path;
}

// --- occupation measures --------------------------------------------------

// Sojourn mass per (time bin x value bin).  The overflow column collects
// transformed values outside the provided value bins so the time marginal
// still sums to the bin length.
struct OccupationMeasure {
    std::vector<double> time_edges;
    std::vector<double> value_edges;
    std::vector<double> mass;  // (time bins) x (value bins), row-major
    std::vector<double> overflow;
    bool value_out_of_bins = false;

    std::size_t time_bins() const { return time_edges.size() > 1 ? time_edges.size() - 1 : 0; }
    std::size_t value_bins() const { return value_edges.size() > 1 ? value_edges.size() - 1 : 0; }
    double& cell(std::size_t ti, std::size_t vi) { return mass[ti * value_bins() + vi]; }
    double cell(std::size_t ti, std::size_t vi) const { return mass[ti * value_bins() + vi]; }
};

// atom_value(i): the real observable of the i-th environment atom
inline OccupationMeasure occupation_measure_by_atom(
    const Path& path, const std::function<double(int)>& atom_value,
    const std::vector<double>& time_edges, const std::vector<double>& value_edges) {
    OccupationMeasure om;
    om.time_edges = time_edges;
    om.value_edges = value_edges;
    om.mass.assign(om.time_bins() * om.value_bins(), 0.0);
    om.overflow.assign(om.time_bins(), 0.0);
    if (om.time_bins() == 0 || path.env_trace.empty()) return om;

    auto value_bin = [&](double v) -> std::ptrdiff_t {
        if (v < value_edges.front() || v > value_edges.back()) return -1;
        auto it = std::upper_bound(value_edges.begin(), value_edges.end(), v);
        std::size_t b = static_cast<std::size_t>(it - value_edges.begin());
        if (b >= value_edges.size()) b = value_edges.size() - 1;  // right edge inclusive
        return static_cast<std::ptrdiff_t>(b - 1);
    };

    for (std::size_t seg = 0; seg < path.env_trace.size(); ++seg) {
        double s0 = path.env_trace[seg].time;
        double s1 = seg + 1 < path.env_trace.size() ? path.env_trace[seg + 1].time
                                                    : path.horizon;
        double v = atom_value(path.env_trace[seg].atom);
        std::ptrdiff_t vb = value_bin(v);
        if (vb < 0) om.value_out_of_bins = true;
        for (std::size_t ti = 0; ti < om.time_bins(); ++ti) {
            double overlap = std::min(s1, time_edges[ti + 1]) - std::max(s0, time_edges[ti]);
            if (overlap <= 0.0) continue;
            if (vb < 0)
                om.overflow[ti] += overlap;
            else
                om.cell(ti, static_cast<std::size_t>(vb)) += overlap;
        }
    }
    return om;
}

inline OccupationMeasure occupation_measure(
    const Path& path, const EnvironmentLaw& env,
    const std::function<double(const OffspringLaw&)>& transform,
    const std::vector<double>& time_edges, const std::vector<double>& value_edges) {
    return occupation_measure_by_atom(
        path, [&](int a) { return transform(env.atoms[static_cast<std::size_t>(a)].law); },
        time_edges, value_edges);
}

inline std::vector<std::pair<double, double>> sup_norm_trace(const Path& path,
                                                             const MigrationKernel& kernel) {
    std::vector<std::pair<double, double>> out;
    out.reserve(path.samples.size());
    for (const auto& s : path.samples)
        out.emplace_back(s.time, ell_gamma_norm(s.state, kernel));
    return out;
}

}  // namespace stoavg
