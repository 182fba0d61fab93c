#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stoavg/acceptance.hpp"
#include "stoavg/ensemble.hpp"
#include "stoavg/generators.hpp"
#include "stoavg/io.hpp"
#include "stoavg/limits.hpp"
#include "stoavg/simulate.hpp"
#include "stoavg/stats.hpp"

namespace {

using namespace stoavg;

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

void write_text(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

std::string simulate_to_string(const ExperimentConfig& cfg) {
    std::vector<double> grid = make_grid(cfg);
    if (cfg.n_paths == 0) throw ConfigError("config key n_paths: must be positive");
    std::ostringstream os;
    write_provenance(os, cfg);

    if (cfg.experiment == "walker") {
        if (cfg.n <= 0) throw ConfigError("config key n: must be positive for walker runs");
        SpeedLaw law = make_speed_law(cfg);
        std::vector<Path> paths(cfg.n_paths);
        parallel_for(cfg.n_paths, cfg.workers ? cfg.workers : default_workers(),
                     [&](std::size_t p) {
                         paths[p] =
                             simulate_speed_walker(law, cfg.n, cfg.horizon, grid, cfg.seed, p);
                     });
        paths_to_csv(os, paths, grid, 1,
                     [&](const Path& path, double t) -> std::optional<std::pair<double, double>> {
                         auto atom = atom_at(path, t);
                         if (!atom) return std::nullopt;
                         return std::pair<double, double>{law.values[*atom], 0.0};
                     });
    } else if (cfg.experiment == "brwre") {
        if (cfg.n <= 0) throw ConfigError("config key n: must be positive for brwre runs");
        MigrationKernel kernel = make_kernel(cfg);
        EnvironmentLaw env = make_environment(cfg, cfg.n);
        std::vector<double> x0 = cfg.x0;
        if (x0.empty()) x0.assign(kernel.size(), 1.0);
        if (x0.size() != kernel.size())
            throw ConfigError("config key x0: length must match the kernel deme count");
        ParticleState init;
        init.n = cfg.n;
        init.counts.resize(kernel.size());
        for (std::size_t d = 0; d < kernel.size(); ++d)
            init.counts[d] = static_cast<long long>(std::llround(x0[d] * cfg.n));
        std::vector<Path> paths(cfg.n_paths);
        parallel_for(cfg.n_paths, cfg.workers ? cfg.workers : default_workers(),
                     [&](std::size_t p) {
                         paths[p] = simulate_brwre(kernel, env, init, cfg.horizon, grid,
                                                   cfg.seed, p, cfg.population_cap);
                     });
        paths_to_csv(os, paths, grid, kernel.size(),
                     [&](const Path& path, double t) -> std::optional<std::pair<double, double>> {
                         auto atom = atom_at(path, t);
                         if (!atom) return std::nullopt;
                         const OffspringLaw& law = env.atoms[*atom].law;
                         return std::pair<double, double>{offspring_mean(law),
                                                          offspring_variance(law)};
                     });
    } else if (cfg.experiment == "sde") {
        if (!(cfg.dt > 0.0)) throw ConfigError("config key dt: must be positive for sde runs");
        MigrationKernel kernel = make_kernel(cfg);
        SdeSpec spec{kernel, cfg.alpha, cfg.sigma_b2, cfg.sigma_e2};
        std::vector<double> x0 = cfg.x0;
        if (x0.empty()) x0.assign(kernel.size(), 1.0);
        if (x0.size() != kernel.size())
            throw ConfigError("config key x0: length must match the kernel deme count");
        Ensemble ens = euler_maruyama(spec, x0, cfg.horizon, cfg.dt, cfg.n_paths, cfg.seed,
                                      grid, cfg.workers);
        ensemble_to_csv(os, ens);
    } else {
        throw ConfigError("config key experiment: '" + cfg.experiment +
                          "' is not a simulate kind (walker | brwre | sde)");
    }
    return os.str();
}

std::string simulate_to_binary(const ExperimentConfig& cfg) {
    std::vector<double> grid = make_grid(cfg);
    if (cfg.n_paths == 0) throw ConfigError("config key n_paths: must be positive");
    Ensemble ens;
    if (cfg.experiment == "walker") {
        if (cfg.n <= 0) throw ConfigError("config key n: must be positive for walker runs");
        ens = walker_ensemble(make_speed_law(cfg), cfg.n, cfg.horizon, grid, cfg.n_paths,
                              cfg.seed, cfg.workers);
    } else if (cfg.experiment == "brwre") {
        if (cfg.n <= 0) throw ConfigError("config key n: must be positive for brwre runs");
        MigrationKernel kernel = make_kernel(cfg);
        EnvironmentLaw env = make_environment(cfg, cfg.n);
        std::vector<double> x0 = cfg.x0;
        if (x0.empty()) x0.assign(kernel.size(), 1.0);
        if (x0.size() != kernel.size())
            throw ConfigError("config key x0: length must match the kernel deme count");
        ParticleState init;
        init.n = cfg.n;
        init.counts.resize(kernel.size());
        for (std::size_t d = 0; d < kernel.size(); ++d)
            init.counts[d] = static_cast<long long>(std::llround(x0[d] * cfg.n));
        ens = brwre_ensemble(kernel, env, init, cfg.horizon, grid, cfg.n_paths, cfg.seed,
                             cfg.workers, cfg.population_cap);
    } else if (cfg.experiment == "sde") {
        if (!(cfg.dt > 0.0)) throw ConfigError("config key dt: must be positive for sde runs");
        MigrationKernel kernel = make_kernel(cfg);
        SdeSpec spec{kernel, cfg.alpha, cfg.sigma_b2, cfg.sigma_e2};
        std::vector<double> x0 = cfg.x0;
        if (x0.empty()) x0.assign(kernel.size(), 1.0);
        ens = euler_maruyama(spec, x0, cfg.horizon, cfg.dt, cfg.n_paths, cfg.seed, grid,
                             cfg.workers);
    } else {
        throw ConfigError("config key experiment: '" + cfg.experiment +
                          "' is not a simulate kind (walker | brwre | sde)");
    }
    std::ostringstream os(std::ios::binary);
    write_binary_summary(os, binary_summary_of(ens));
    return os.str();
}

int cmd_simulate(const std::string& config_path, const std::string& output_override) {
    ExperimentConfig cfg = load_config(config_path);
    std::string out = !output_override.empty() ? output_override : cfg.output;
    std::string payload =
        cfg.format == "binary" ? simulate_to_binary(cfg) : simulate_to_string(cfg);
    write_text(out, payload);
    return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& out_path) {
    std::ifstream fa(a_path), fb(b_path);
    if (!fa) throw std::runtime_error("cannot open ensemble file: " + a_path);
    if (!fb) throw std::runtime_error("cannot open ensemble file: " + b_path);
    Ensemble a = read_ensemble_csv(fa);
    Ensemble b = read_ensemble_csv(fb);
    std::vector<TestVerdict> verdicts = compare_ensembles(a, b);
    write_text(out_path, verdicts_to_json(verdicts).dump(2) + "\n");
    return 0;
}

int cmd_check_generators(const std::string& config_path, const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path);
    if (cfg.n <= 0) throw ConfigError("config key n: must be positive for generator checks");
    MigrationKernel kernel = make_kernel(cfg);
    EnvironmentLaw env = make_environment(cfg, cfg.n);
    std::vector<TestVerdict> verdicts;

    std::vector<double> x(kernel.size(), 1.0);
    if (!cfg.x0.empty() && cfg.x0.size() == kernel.size()) x = cfg.x0;
    TestFunction f = poly_bump({0}, {2});
    TestFunction g = kernel.size() > 1 ? poly_bump({0, 1}, {1, 1}) : poly_bump({0}, {3});
    TestFunction fg = add(f, g, 2.0, -0.5);

    {
        TestVerdict v;
        v.name = "linearity";
        double lhs = apply_L0(fg.value, x, cfg.n, kernel);
        double rhs = 2.0 * apply_L0(f.value, x, cfg.n, kernel) -
                     0.5 * apply_L0(g.value, x, cfg.n, kernel);
        double r0 = std::abs(lhs - rhs);
        const OffspringLaw& z = env.atoms.front().law;
        double l1lhs = apply_L1(fg.value, x, z, cfg.n);
        double l1rhs =
            2.0 * apply_L1(f.value, x, z, cfg.n) - 0.5 * apply_L1(g.value, x, z, cfg.n);
        double r1 = std::abs(l1lhs - l1rhs);
        v.statistic = std::max(r0, r1);
        v.score_kind = "residual";
        v.score = v.statistic;
        v.pass = v.statistic <= 1e-10;
        v.detail = "L0 and L1 linearity residuals";
        verdicts.push_back(v);
    }
    {
        TestVerdict v;
        v.name = "poisson_identity";
        double worst = 0.0;
        for (const auto& atom : env.atoms)
            worst = std::max(worst, poisson_identity_residual(f.value, x, atom.law, env, cfg.n));
        v.statistic = worst;
        v.score_kind = "residual";
        v.score = worst;
        v.pass = worst <= 1e-12;
        v.detail = "max over atoms at x0";
        verdicts.push_back(v);
    }
    {
        TestVerdict v;
        v.name = "iterated_vs_A2";
        MomentReport rep = moment_report(env, 4.0);
        double a2 = A2(f, x, rep.var_m);
        double mean = env.expect(
            [&](const OffspringLaw& z) { return iterated_L1(f.value, x, z, cfg.n); });
        v.statistic = std::abs(mean - a2);
        v.score = a2 != 0.0 ? v.statistic / std::abs(a2) : v.statistic;
        v.score_kind = "relative";
        v.pass = true;  // informational at a single n
        v.detail = "E[L1 L1 f] vs A2(f, var_m) at n=" + std::to_string(cfg.n);
        verdicts.push_back(v);
    }
    write_text(out_path, verdicts_to_json(verdicts).dump(2) + "\n");
    return 0;
}

int cmd_averaging_report(const std::string& config_path, const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path);
    if (cfg.n_list.empty()) throw ConfigError("missing config key: n_list");
    if (cfg.n_paths == 0) throw ConfigError("config key n_paths: must be positive");
    MigrationKernel kernel = make_kernel(cfg);
    auto family = [&](long n) { return make_environment(cfg, n); };
    TestFunction f = poly_bump({0}, {2});
    std::vector<std::vector<double>> state_grid;
    for (int i = 1; i <= 10; ++i) state_grid.push_back(std::vector<double>(kernel.size(), 0.2 * i));
    std::vector<double> x0 = cfg.x0;
    if (x0.empty()) x0.assign(kernel.size(), 1.0);
    AveragingReport rep = averaging_condition_report(f, kernel, family, cfg.n_list, cfg.horizon,
                                                     cfg.n_paths, cfg.seed, state_grid, x0);
    std::ostringstream os;
    write_provenance(os, cfg);
    os << "# alpha=" << format_double(rep.alpha) << " sigma_b2=" << format_double(rep.sigma_b2)
       << " sigma_e2=" << format_double(rep.sigma_e2)
       << " slope_h_sup=" << format_double(rep.slope_h_sup)
       << " slope_a1_gap=" << format_double(rep.slope_a1_gap)
       << " slope_a2_gap=" << format_double(rep.slope_a2_gap) << "\n";
    os << "n,h_sup_mean,h_sup_se,a1_gap_sup,a2_gap_mean,a2_gap_se,lp_mean,lp_se,"
          "poisson_residual_max,paths\n";
    for (const auto& r : rep.rows)
        os << r.n << "," << format_double(r.h_sup_mean) << "," << format_double(r.h_sup_se)
           << "," << format_double(r.a1_gap_sup) << "," << format_double(r.a2_gap_mean) << ","
           << format_double(r.a2_gap_se) << "," << format_double(r.lp_mean) << ","
           << format_double(r.lp_se) << "," << format_double(r.poisson_residual_max) << ","
           << r.paths << "\n";
    write_text(out_path, os.str());
    return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path);
    if (!(cfg.rho > 0.0)) throw ConfigError("config key rho: must be positive");
    if (!(cfg.t >= 0.0)) throw ConfigError("config key t: must be non-negative");
    std::ostringstream os;
    write_provenance(os, cfg);
    os << "rho,t,var_y,variance_oracle\n";
    os << format_double(cfg.rho) << "," << format_double(cfg.t) << ","
       << format_double(cfg.var_y) << ","
       << format_double(variance_oracle(cfg.rho, cfg.t, cfg.var_y)) << "\n";
    write_text(out_path, os.str());
    return 0;
}

int cmd_verify(const std::string& out_path, unsigned workers, unsigned fresh_seeds) {
    std::vector<TestVerdict> verdicts = run_acceptance(workers);
    bool all = true;
    for (const auto& v : verdicts) {
        std::cout << (v.pass ? "PASS" : "FAIL") << "  " << v.name << "  " << v.detail << "\n";
        all = all && v.pass;
    }
    if (fresh_seeds > 0) {
        std::vector<std::size_t> passes(verdicts.size(), 0);
        for (unsigned k = 1; k <= fresh_seeds; ++k) {
            std::vector<TestVerdict> fresh = run_acceptance(workers, 10'000ULL * k);
            for (std::size_t i = 0; i < fresh.size(); ++i)
                if (fresh[i].pass) ++passes[i];
        }
        std::cout << "fresh-seed pass rates over " << fresh_seeds << " reruns:\n";
        for (std::size_t i = 0; i < verdicts.size(); ++i)
            std::cout << "  " << verdicts[i].name << "  " << passes[i] << "/" << fresh_seeds
                      << "\n";
    }
    if (!out_path.empty()) write_text(out_path, verdicts_to_json(verdicts).dump(2) + "\n");
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic averaging toolkit"};
    app.require_subcommand(1);

    std::string config_path, output_path, a_path, b_path;
    unsigned workers = 0;

    auto* sim = app.add_subcommand("simulate", "run a walker/brwre/sde experiment");
    sim->add_option("--config", config_path, "JSON config file")->required();
    sim->add_option("--output", output_path, "output path (overrides config; - for stdout)");

    auto* cmp = app.add_subcommand("compare", "agreement tests between two ensemble CSVs");
    cmp->add_option("--a", a_path, "first ensemble CSV")->required();
    cmp->add_option("--b", b_path, "second ensemble CSV")->required();
    cmp->add_option("--output", output_path, "verdict JSON path (- for stdout)");

    auto* chk = app.add_subcommand("check-generators", "structural generator identities");
    chk->add_option("--config", config_path, "JSON config file")->required();
    chk->add_option("--output", output_path, "verdict JSON path (- for stdout)");

    auto* avg = app.add_subcommand("averaging-report", "averaging-hypothesis quantities vs n");
    avg->add_option("--config", config_path, "JSON config file")->required();
    avg->add_option("--output", output_path, "report CSV path (- for stdout)");

    auto* orc = app.add_subcommand("oracle", "closed-form switching-integral variance");
    orc->add_option("--config", config_path, "JSON config file")->required();
    orc->add_option("--output", output_path, "CSV path (- for stdout)");

    unsigned fresh_seeds = 0;
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    ver->add_option("--output", output_path, "verdict JSON path");
    ver->add_option("--workers", workers, "worker threads (0 = STOAVG_WORKERS or 1)");
    ver->add_option("--fresh-seeds", fresh_seeds, "extra non-pinned reruns; report pass rates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, output_path);
        if (cmp->parsed()) return cmd_compare(a_path, b_path, output_path);
        if (chk->parsed()) return cmd_check_generators(config_path, output_path);
        if (avg->parsed()) return cmd_averaging_report(config_path, output_path);
        if (orc->parsed()) return cmd_oracle(config_path, output_path);
        if (ver->parsed()) return cmd_verify(output_path, workers, fresh_seeds);
    } catch (const stoavg::ConfigError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
