#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stoavg/common.hpp"
#include "stoavg/env.hpp"
#include "stoavg/lattice.hpp"
#include "stoavg/limits.hpp"
#include "stoavg/simulate.hpp"
#include "stoavg/stats.hpp"

namespace stoavg {

inline constexpr const char* kVersion = "1.0.0";

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Shortest decimal representation that round-trips a double.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    double back = std::strtod(buf, nullptr);
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
        if (std::strtod(shorter, nullptr) == back) return shorter;
    }
    return buf;
}

// --- experiment configuration ---------------------------------------------

struct ExperimentConfig {
    std::string experiment;  // walker | brwre | sde | generator-check | averaging-report | oracle
    std::uint64_t seed = 0;
    unsigned workers = 0;

    long n = 0;
    std::vector<long> n_list;
    double horizon = 1.0;
    std::vector<double> grid;      // explicit record times; wins over grid_points
    std::size_t grid_points = 0;   // uniform grid j*horizon/points, j = 1..points
    double dt = 0.0;
    std::size_t n_paths = 0;
    long long population_cap = 100'000'000;

    std::string kernel_builder;    // single | cycle | complete | matrix
    std::size_t kernel_k = 1;
    double kernel_rate = 1.0;
    std::vector<std::vector<double>> kernel_matrix;
    std::vector<double> kernel_gamma;

    std::string env_family;        // two-point | correlated | atoms
    double alpha = 0.0;
    double sigma_e = 0.0;
    double beta = 1.0;
    double v_plus = 0.0;
    double v_minus = 0.0;
    struct RawAtom {
        std::vector<long> support;
        std::vector<double> probs;
        double weight = 1.0;
    };
    std::vector<RawAtom> atoms;

    double sigma_b2 = 0.0;
    double sigma_e2 = 0.0;

    std::vector<double> speed_values;
    std::vector<double> speed_probs;

    double rho = 0.0;
    double t = 0.0;
    double var_y = 1.0;

    std::vector<double> x0;
    std::string output;
    std::string format = "csv";    // csv | binary
};

namespace detail {

template <class T>
T require_key(const nlohmann::ordered_json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing config key: " + key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key has wrong type: " + key);
    }
}

template <class T>
void optional_key(const nlohmann::ordered_json& j, const std::string& key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key has wrong type: " + key);
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::ordered_json& j) {
    ExperimentConfig c;
    c.experiment = detail::require_key<std::string>(j, "experiment");
    static const std::vector<std::string> kinds = {"walker",          "brwre",
                                                   "sde",             "generator-check",
                                                   "averaging-report", "oracle"};
    if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
        throw ConfigError("unknown value for config key: experiment");
    c.seed = detail::require_key<std::uint64_t>(j, "seed");

    detail::optional_key(j, "workers", c.workers);
    detail::optional_key(j, "n", c.n);
    detail::optional_key(j, "n_list", c.n_list);
    detail::optional_key(j, "horizon", c.horizon);
    detail::optional_key(j, "grid", c.grid);
    detail::optional_key(j, "grid_points", c.grid_points);
    detail::optional_key(j, "dt", c.dt);
    detail::optional_key(j, "n_paths", c.n_paths);
    detail::optional_key(j, "population_cap", c.population_cap);

    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        if (!k.is_object()) throw ConfigError("config key has wrong type: kernel");
        c.kernel_builder = detail::require_key<std::string>(k, "builder");
        if (c.kernel_builder == "matrix") {
            c.kernel_matrix = detail::require_key<std::vector<std::vector<double>>>(k, "matrix");
            if (k.contains("gamma"))
                c.kernel_gamma = detail::require_key<std::vector<double>>(k, "gamma");
        } else if (c.kernel_builder != "single") {
            c.kernel_k = detail::require_key<std::size_t>(k, "k");
            c.kernel_rate = detail::require_key<double>(k, "rate");
        }
    }

    if (j.contains("environment")) {
        const auto& e = j.at("environment");
        if (!e.is_object()) throw ConfigError("config key has wrong type: environment");
        c.env_family = detail::require_key<std::string>(e, "family");
        detail::optional_key(e, "alpha", c.alpha);
        detail::optional_key(e, "sigma_e", c.sigma_e);
        detail::optional_key(e, "beta", c.beta);
        detail::optional_key(e, "v_plus", c.v_plus);
        detail::optional_key(e, "v_minus", c.v_minus);
        if (c.env_family == "atoms") {
            if (!e.contains("atoms")) throw ConfigError("missing config key: environment.atoms");
            for (const auto& a : e.at("atoms")) {
                ExperimentConfig::RawAtom raw;
                raw.support = detail::require_key<std::vector<long>>(a, "support");
                raw.probs = detail::require_key<std::vector<double>>(a, "probs");
                detail::optional_key(a, "weight", raw.weight);
                c.atoms.push_back(std::move(raw));
            }
        }
    }

    detail::optional_key(j, "alpha", c.alpha);
    detail::optional_key(j, "sigma_b2", c.sigma_b2);
    detail::optional_key(j, "sigma_e2", c.sigma_e2);

    if (j.contains("speed_law")) {
        const auto& s = j.at("speed_law");
        c.speed_values = detail::require_key<std::vector<double>>(s, "values");
        c.speed_probs = detail::require_key<std::vector<double>>(s, "probs");
    }

    detail::optional_key(j, "rho", c.rho);
    detail::optional_key(j, "t", c.t);
    detail::optional_key(j, "var_y", c.var_y);
    detail::optional_key(j, "x0", c.x0);
    detail::optional_key(j, "output", c.output);
    detail::optional_key(j, "format", c.format);
    if (c.format != "csv" && c.format != "binary")
        throw ConfigError("unknown value for config key: format");
    return c;
}

inline nlohmann::ordered_json serialize_config(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    if (c.workers != 0) j["workers"] = c.workers;
    if (c.n != 0) j["n"] = c.n;
    if (!c.n_list.empty()) j["n_list"] = c.n_list;
    j["horizon"] = c.horizon;
    if (!c.grid.empty()) j["grid"] = c.grid;
    if (c.grid_points != 0) j["grid_points"] = c.grid_points;
    if (c.dt != 0.0) j["dt"] = c.dt;
    if (c.n_paths != 0) j["n_paths"] = c.n_paths;
    if (c.population_cap != 100'000'000) j["population_cap"] = c.population_cap;

    if (!c.kernel_builder.empty()) {
        nlohmann::ordered_json k;
        k["builder"] = c.kernel_builder;
        if (c.kernel_builder == "matrix") {
            k["matrix"] = c.kernel_matrix;
            if (!c.kernel_gamma.empty()) k["gamma"] = c.kernel_gamma;
        } else if (c.kernel_builder != "single") {
            k["k"] = c.kernel_k;
            k["rate"] = c.kernel_rate;
        }
        j["kernel"] = k;
    }

    if (!c.env_family.empty()) {
        nlohmann::ordered_json e;
        e["family"] = c.env_family;
        if (c.alpha != 0.0) e["alpha"] = c.alpha;
        if (c.sigma_e != 0.0) e["sigma_e"] = c.sigma_e;
        if (c.beta != 1.0) e["beta"] = c.beta;
        if (c.v_plus != 0.0) e["v_plus"] = c.v_plus;
        if (c.v_minus != 0.0) e["v_minus"] = c.v_minus;
        if (c.env_family == "atoms") {
            nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
            for (const auto& a : c.atoms) {
                nlohmann::ordered_json atom;
                atom["support"] = a.support;
                atom["probs"] = a.probs;
                atom["weight"] = a.weight;
                atoms.push_back(atom);
            }
            e["atoms"] = atoms;
        }
        j["environment"] = e;
    } else if (c.alpha != 0.0) {
        j["alpha"] = c.alpha;
    }

    if (c.sigma_b2 != 0.0) j["sigma_b2"] = c.sigma_b2;
    if (c.sigma_e2 != 0.0) j["sigma_e2"] = c.sigma_e2;

    if (!c.speed_values.empty()) {
        nlohmann::ordered_json s;
        s["values"] = c.speed_values;
        s["probs"] = c.speed_probs;
        j["speed_law"] = s;
    }

    if (c.rho != 0.0) j["rho"] = c.rho;
    if (c.t != 0.0) j["t"] = c.t;
    if (c.var_y != 1.0) j["var_y"] = c.var_y;
    if (!c.x0.empty()) j["x0"] = c.x0;
    if (!c.output.empty()) j["output"] = c.output;
    if (c.format != "csv") j["format"] = c.format;
    return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
    std::string s = serialize_config(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- derived objects from a config ----------------------------------------

inline std::vector<double> make_grid(const ExperimentConfig& c) {
    if (!c.grid.empty()) {
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            if (c.grid[i] < 0.0 || c.grid[i] > c.horizon + 1e-12)
                throw ConfigError("config key grid: times must lie in [0, horizon]");
            if (i > 0 && c.grid[i] <= c.grid[i - 1])
                throw ConfigError("config key grid: times must increase");
        }
        return c.grid;
    }
    std::size_t points = c.grid_points != 0 ? c.grid_points : 10;
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = c.horizon * static_cast<double>(i + 1) / static_cast<double>(points);
    return g;
}

inline MigrationKernel make_kernel(const ExperimentConfig& c) {
    const std::string& b = c.kernel_builder;
    try {
        if (b.empty() || b == "single") return single_deme();
        if (b == "cycle") return cycle_kernel(c.kernel_k, c.kernel_rate);
        if (b == "complete") return complete_kernel(c.kernel_k, c.kernel_rate);
        if (b == "matrix") {
            std::vector<double> gamma = c.kernel_gamma;
            if (gamma.empty()) gamma.assign(c.kernel_matrix.size(), 1.0);
            return validate_kernel(c.kernel_matrix, gamma);
        }
    } catch (const UnbalancedKernel& e) {
        throw ConfigError(std::string("config key kernel: ") + e.what());
    } catch (const NonpositiveWeight& e) {
        throw ConfigError(std::string("config key kernel: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key kernel: ") + e.what());
    }
    throw ConfigError("unknown value for config key: kernel.builder");
}

inline EnvironmentLaw make_environment(const ExperimentConfig& c, long n) {
    try {
        if (c.env_family == "two-point")
            return two_point_environment(c.alpha, c.sigma_e, n, c.beta);
        if (c.env_family == "correlated")
            return correlated_environment(c.alpha, c.sigma_e, c.v_plus, c.v_minus, n, c.beta);
        if (c.env_family == "atoms") {
            EnvironmentLaw env;
            env.n = n;
            env.beta = c.beta;
            for (const auto& raw : c.atoms) {
                if (raw.support.size() != raw.probs.size())
                    throw ConfigError(
                        "config key environment.atoms: support/probs length mismatch");
                OffspringLaw law;
                for (std::size_t i = 0; i < raw.support.size(); ++i)
                    law.probs.emplace_back(raw.support[i], raw.probs[i]);
                env.atoms.push_back({std::move(law), raw.weight});
            }
            env.validate();
            return env;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key environment: ") + e.what());
    }
    throw ConfigError("unknown value for config key: environment.family");
}

inline SpeedLaw make_speed_law(const ExperimentConfig& c) {
    SpeedLaw law{c.speed_values, c.speed_probs};
    try {
        law.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key speed_law: ") + e.what());
    }
    return law;
}

// --- CSV and binary emission ----------------------------------------------

inline void write_provenance(std::ostream& os, const ExperimentConfig& c) {
    os << "# stoavg version=" << kVersion << " config=" << config_hash(c)
       << " seed=" << c.seed << "\n";
}

// columns: path_id, time, deme_0.., env_mean, env_var.  env_stats(path, t)
// supplies the environment observable at time t, or nullopt for nan columns.
inline void paths_to_csv(
    std::ostream& os, const std::vector<Path>& paths, const std::vector<double>& times,
    std::size_t n_demes,
    const std::function<std::optional<std::pair<double, double>>(const Path&, double)>&
        env_stats) {
    os << "path_id,time";
    for (std::size_t d = 0; d < n_demes; ++d) os << ",deme_" << d;
    os << ",env_mean,env_var\n";
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (std::size_t t = 0; t < times.size(); ++t) {
            os << p << "," << format_double(times[t]);
            for (std::size_t d = 0; d < n_demes; ++d)
                os << "," << format_double(paths[p].samples[t].state[d]);
            auto env = env_stats ? env_stats(paths[p], times[t]) : std::nullopt;
            if (env)
                os << "," << format_double(env->first) << "," << format_double(env->second);
            else
                os << ",nan,nan";
            os << "\n";
        }
    }
}

// Index of the environment atom active at time t, from the switch trace.
inline std::optional<int> atom_at(const Path& path, double t) {
    if (path.env_trace.empty()) return std::nullopt;
    int atom = path.env_trace.front().atom;
    for (const auto& sw : path.env_trace) {
        if (sw.time > t + 1e-15) break;
        atom = sw.atom;
    }
    return atom;
}

inline void ensemble_to_csv(std::ostream& os, const Ensemble& ens) {
    os << "path_id,time";
    for (std::size_t d = 0; d < ens.n_demes; ++d) os << ",deme_" << d;
    os << ",env_mean,env_var\n";
    for (std::size_t p = 0; p < ens.n_paths; ++p)
        for (std::size_t t = 0; t < ens.times.size(); ++t) {
            os << p << "," << format_double(ens.times[t]);
            for (std::size_t d = 0; d < ens.n_demes; ++d)
                os << "," << format_double(ens.at(p, t, d));
            os << ",nan,nan\n";
        }
}

inline void summary_to_csv(std::ostream& os, const EnsembleSummary& s) {
    os << "time,deme,mean,var,se,n_paths\n";
    for (std::size_t t = 0; t < s.times.size(); ++t)
        for (std::size_t d = 0; d < s.n_demes; ++d)
            os << format_double(s.times[t]) << "," << d << ","
               << format_double(s.at_mean(t, d)) << "," << format_double(s.at_var(t, d)) << ","
               << format_double(s.at_se(t, d)) << "," << s.n_paths << "\n";
}

// Binary ensemble summary.  Layout (little-endian):
//   magic "STAV", u32 format version, u64 n, u64 seed,
//   u64 n_paths, u64 n_times, u64 n_demes,
//   f64 times[n_times], f64 mean[n_times*n_demes], f64 var[n_times*n_demes].
struct BinarySummary {
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t n_paths = 0;
    std::vector<double> times;
    std::uint64_t n_demes = 1;
    std::vector<double> mean, variance;
};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace detail

inline void write_binary_summary(std::ostream& os, const BinarySummary& b) {
    os.write("STAV", 4);
    detail::put<std::uint32_t>(os, 1);
    detail::put<std::uint64_t>(os, b.n);
    detail::put<std::uint64_t>(os, b.seed);
    detail::put<std::uint64_t>(os, b.n_paths);
    detail::put<std::uint64_t>(os, b.times.size());
    detail::put<std::uint64_t>(os, b.n_demes);
    for (double t : b.times) detail::put(os, t);
    for (double m : b.mean) detail::put(os, m);
    for (double v : b.variance) detail::put(os, v);
}

inline BinarySummary read_binary_summary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "STAV")
        throw std::runtime_error("read_binary_summary: bad magic");
    if (detail::get<std::uint32_t>(is) != 1)
        throw std::runtime_error("read_binary_summary: unsupported format version");
    BinarySummary b;
    b.n = detail::get<std::uint64_t>(is);
    b.seed = detail::get<std::uint64_t>(is);
    b.n_paths = detail::get<std::uint64_t>(is);
    std::uint64_t nt = detail::get<std::uint64_t>(is);
    b.n_demes = detail::get<std::uint64_t>(is);
    b.times.resize(nt);
    for (auto& t : b.times) t = detail::get<double>(is);
    b.mean.resize(nt * b.n_demes);
    for (auto& m : b.mean) m = detail::get<double>(is);
    b.variance.resize(nt * b.n_demes);
    for (auto& v : b.variance) v = detail::get<double>(is);
    if (!is) throw std::runtime_error("read_binary_summary: truncated file");
    return b;
}

inline BinarySummary binary_summary_of(const Ensemble& ens) {
    EnsembleSummary s = ensemble_summary(ens);
    BinarySummary b;
    auto it = ens.meta.find("n");
    b.n = it != ens.meta.end() ? static_cast<std::uint64_t>(it->second) : 0;
    b.seed = ens.seed;
    b.n_paths = ens.n_paths;
    b.times = s.times;
    b.n_demes = s.n_demes;
    b.mean = s.mean;
    b.variance = s.variance;
    return b;
}

// Reads an ensemble CSV produced by ensemble_to_csv / paths_to_csv, skipping
// provenance comment lines.  The env columns are dropped.
inline Ensemble read_ensemble_csv(std::istream& is) {
    std::string line;
    do {
        if (!std::getline(is, line)) throw std::runtime_error("ensemble csv: missing header");
    } while (!line.empty() && line[0] == '#');
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    if (cols.size() < 3 || cols[0] != "path_id" || cols[1] != "time")
        throw std::runtime_error("ensemble csv: unexpected header");
    std::size_t n_demes = 0;
    for (const auto& c : cols)
        if (c.rfind("deme_", 0) == 0) ++n_demes;
    if (n_demes == 0) throw std::runtime_error("ensemble csv: no deme columns");

    Ensemble ens;
    ens.n_demes = n_demes;
    ens.kind = "csv";
    std::vector<double> flat;
    std::size_t rows = 0;
    bool times_done = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2 + n_demes) throw std::runtime_error("ensemble csv: short row");
        std::size_t path_id = std::stoull(cells[0]);
        double t = std::strtod(cells[1].c_str(), nullptr);
        if (path_id != 0) times_done = true;
        if (!times_done) {
            ens.times.push_back(t);
        } else {
            times_done = true;
            std::size_t slot = rows % ens.times.size();
            if (std::abs(ens.times[slot] - t) > 1e-12)
                throw std::runtime_error("ensemble csv: inconsistent time grid");
        }
        for (std::size_t d = 0; d < n_demes; ++d)
            flat.push_back(std::strtod(cells[2 + d].c_str(), nullptr));
        ++rows;
    }
    if (ens.times.empty() || rows % ens.times.size() != 0)
        throw std::runtime_error("ensemble csv: ragged path blocks");
    ens.n_paths = rows / ens.times.size();
    ens.data = std::move(flat);
    return ens;
}

// --- verdict emission -----------------------------------------------------

inline nlohmann::ordered_json verdict_to_json(const TestVerdict& v) {
    nlohmann::ordered_json j;
    j["name"] = v.name;
    j["statistic"] = v.statistic;
    j["score"] = v.score;
    j["score_kind"] = v.score_kind;
    j["pass"] = v.pass;
    j["seed"] = v.seed;
    j["samples"] = v.samples;
    j["detail"] = v.detail;
    return j;
}

inline nlohmann::ordered_json verdicts_to_json(const std::vector<TestVerdict>& vs) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["verdicts"] = nlohmann::ordered_json::array();
    bool all = true;
    for (const auto& v : vs) {
        j["verdicts"].push_back(verdict_to_json(v));
        all = all && v.pass;
    }
    j["all_pass"] = all;
    return j;
}

}  // namespace stoavg
