#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "stoavg/ensemble.hpp"
#include "stoavg/io.hpp"

using namespace stoavg;
using nlohmann::ordered_json;

namespace {

ordered_json sample_config_json() {
    return ordered_json::parse(R"({
        "experiment": "brwre",
        "seed": 42,
        "n": 10,
        "horizon": 1.0,
        "grid_points": 4,
        "n_paths": 20,
        "kernel": {"builder": "cycle", "k": 3, "rate": 1.5},
        "environment": {"family": "two-point", "alpha": 0.4, "sigma_e": 0.3},
        "x0": [1.0, 1.0, 1.0]
    })");
}

}  // namespace

TEST_CASE("config round trip is stable", "[io]") {
    ExperimentConfig c = parse_config(sample_config_json());
    ordered_json once = serialize_config(c);
    ExperimentConfig c2 = parse_config(once);
    ordered_json twice = serialize_config(c2);
    REQUIRE(once.dump() == twice.dump());
    REQUIRE(config_hash(c) == config_hash(c2));

    ExperimentConfig c3 = c;
    c3.seed = 43;
    REQUIRE(config_hash(c) != config_hash(c3));
}

TEST_CASE("config errors name the offending key", "[io]") {
    auto expect_error = [](ordered_json j, const std::string& key) {
        try {
            parse_config(j);
            FAIL("expected ConfigError for " + key);
        } catch (const ConfigError& e) {
            INFO(e.what());
            REQUIRE(std::string(e.what()).find(key) != std::string::npos);
        }
    };
    ordered_json j = sample_config_json();
    j.erase("experiment");
    expect_error(j, "experiment");

    j = sample_config_json();
    j["experiment"] = "unknown-kind";
    expect_error(j, "experiment");

    j = sample_config_json();
    j.erase("seed");
    expect_error(j, "seed");

    j = sample_config_json();
    j["n_paths"] = "twenty";
    expect_error(j, "n_paths");

    j = sample_config_json();
    j["kernel"].erase("builder");
    expect_error(j, "builder");

    j = sample_config_json();
    j["environment"]["family"] = 7;
    expect_error(j, "family");

    j = sample_config_json();
    j["format"] = "xml";
    expect_error(j, "format");
}

TEST_CASE("grid construction", "[io]") {
    ExperimentConfig c = parse_config(sample_config_json());
    auto grid = make_grid(c);
    REQUIRE(grid.size() == 4);
    REQUIRE(grid.front() == 0.25);
    REQUIRE(grid.back() == 1.0);

    c.grid = {0.5, 0.25};
    REQUIRE_THROWS_AS(make_grid(c), ConfigError);
    c.grid = {0.5, 2.0};
    REQUIRE_THROWS_AS(make_grid(c), ConfigError);
    c.grid = {0.25, 0.5};
    REQUIRE(make_grid(c) == c.grid);

    c.grid.clear();
    c.grid_points = 0;
    REQUIRE(make_grid(c).size() == 10);
}

TEST_CASE("kernel construction from configs", "[io]") {
    ExperimentConfig c = parse_config(sample_config_json());
    MigrationKernel k = make_kernel(c);
    REQUIRE(k.size() == 3);
    REQUIRE(k.mu == 3.0);

    c.kernel_builder = "matrix";
    c.kernel_matrix = {{0.0, 2.0}, {1.0, 0.0}};
    c.kernel_gamma.clear();
    try {
        make_kernel(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("kernel") != std::string::npos);
    }

    c.kernel_builder = "moebius";
    REQUIRE_THROWS_AS(make_kernel(c), ConfigError);

    c.kernel_builder = "";
    REQUIRE(make_kernel(c).size() == 1);
}

TEST_CASE("environment construction from configs", "[io]") {
    ExperimentConfig c = parse_config(sample_config_json());
    EnvironmentLaw env = make_environment(c, 10);
    REQUIRE(env.atoms.size() == 2);
    REQUIRE(env.n == 10);

    c.env_family = "atoms";
    c.atoms = {{{0, 2}, {0.5, 0.5}, 1.0}};
    EnvironmentLaw fair = make_environment(c, 5);
    REQUIRE(fair.atoms.size() == 1);
    REQUIRE(offspring_mean(fair.atoms[0].law) == 1.0);

    c.atoms = {{{0, 2}, {0.5}, 1.0}};
    REQUIRE_THROWS_AS(make_environment(c, 5), ConfigError);

    c.env_family = "weather";
    REQUIRE_THROWS_AS(make_environment(c, 5), ConfigError);

    c.env_family = "two-point";
    c.sigma_e = 2.0;
    try {
        make_environment(c, 10);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("environment") != std::string::npos);
    }
}

TEST_CASE("speed law construction", "[io]") {
    ExperimentConfig c;
    c.speed_values = {0.0, 0.2};
    c.speed_probs = {0.5, 0.5};
    REQUIRE(make_speed_law(c).mean() == 0.1);
    c.speed_probs = {0.5, 0.6};
    REQUIRE_THROWS_AS(make_speed_law(c), ConfigError);
}

TEST_CASE("format_double round trips", "[io]") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0625, 2.0}) {
        std::string s = format_double(x);
        REQUIRE(std::strtod(s.c_str(), nullptr) == x);
    }
    REQUIRE(format_double(2.0) == "2");
    REQUIRE(format_double(0.5) == "0.5");
}

TEST_CASE("ensemble csv round trip", "[io]") {
    Ensemble ens;
    ens.times = {0.5, 1.0};
    ens.n_demes = 2;
    ens.n_paths = 3;
    ens.allocate();
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t d = 0; d < 2; ++d)
                ens.at(p, t, d) = 0.1 * double(p) + double(t) + 10.0 * double(d);

    std::ostringstream os;
    os << "# stoavg version=" << kVersion << " test\n";
    ensemble_to_csv(os, ens);
    std::istringstream is(os.str());
    Ensemble back = read_ensemble_csv(is);
    REQUIRE(back.times == ens.times);
    REQUIRE(back.n_demes == 2);
    REQUIRE(back.n_paths == 3);
    REQUIRE(back.data == ens.data);
}

TEST_CASE("ensemble csv rejects malformed input", "[io]") {
    std::istringstream empty("");
    REQUIRE_THROWS_WITH(read_ensemble_csv(empty),
                        Catch::Matchers::ContainsSubstring("header"));
    std::istringstream bad_header("a,b,c\n");
    REQUIRE_THROWS_WITH(read_ensemble_csv(bad_header),
                        Catch::Matchers::ContainsSubstring("header"));
    std::istringstream ragged(
        "path_id,time,deme_0,env_mean,env_var\n0,0.5,1,nan,nan\n0,1,2,nan,nan\n1,0.5,3,nan,nan\n");
    REQUIRE_THROWS_WITH(read_ensemble_csv(ragged),
                        Catch::Matchers::ContainsSubstring("ragged"));
    std::istringstream bad_grid(
        "path_id,time,deme_0,env_mean,env_var\n0,0.5,1,nan,nan\n1,0.75,3,nan,nan\n");
    REQUIRE_THROWS_WITH(read_ensemble_csv(bad_grid),
                        Catch::Matchers::ContainsSubstring("time grid"));
}

TEST_CASE("binary summary round trip", "[io]") {
    BinarySummary b;
    b.n = 10;
    b.seed = 42;
    b.n_paths = 100;
    b.times = {0.5, 1.0};
    b.n_demes = 2;
    b.mean = {1.0, 2.0, 3.0, 4.0};
    b.variance = {0.1, 0.2, 0.3, 0.4};
    std::ostringstream os(std::ios::binary);
    write_binary_summary(os, b);
    std::istringstream is(os.str(), std::ios::binary);
    BinarySummary back = read_binary_summary(is);
    REQUIRE(back.n == 10);
    REQUIRE(back.seed == 42);
    REQUIRE(back.n_paths == 100);
    REQUIRE(back.times == b.times);
    REQUIRE(back.mean == b.mean);
    REQUIRE(back.variance == b.variance);

    std::istringstream junk("NOPE....");
    REQUIRE_THROWS_WITH(read_binary_summary(junk),
                        Catch::Matchers::ContainsSubstring("magic"));
    std::istringstream cut(os.str().substr(0, 20), std::ios::binary);
    REQUIRE_THROWS_AS(read_binary_summary(cut), std::runtime_error);
}

TEST_CASE("verdict serialization", "[io]") {
    TestVerdict v;
    v.name = "demo";
    v.statistic = 1.5;
    v.score = 0.2;
    v.score_kind = "p";
    v.pass = true;
    v.samples = 10;
    ordered_json j = verdicts_to_json({v});
    REQUIRE(j["version"] == kVersion);
    REQUIRE(j["all_pass"] == true);
    REQUIRE(j["verdicts"].size() == 1);
    REQUIRE(j["verdicts"][0]["name"] == "demo");
    REQUIRE(j["verdicts"][0]["score_kind"] == "p");

    TestVerdict bad;
    bad.name = "bad";
    ordered_json j2 = verdicts_to_json({v, bad});
    REQUIRE(j2["all_pass"] == false);
}

TEST_CASE("provenance line", "[io]") {
    ExperimentConfig c = parse_config(sample_config_json());
    std::ostringstream os;
    write_provenance(os, c);
    std::string line = os.str();
    REQUIRE(line.rfind("# stoavg version=", 0) == 0);
    REQUIRE(line.find("seed=42") != std::string::npos);
    REQUIRE(line.find(config_hash(c)) != std::string::npos);
}

TEST_CASE("atom lookup from the switch trace", "[io]") {
    Path p;
    p.horizon = 1.0;
    p.env_trace = {{0.0, 0}, {0.4, 2}, {0.9, 1}};
    REQUIRE(atom_at(p, 0.0) == 0);
    REQUIRE(atom_at(p, 0.39) == 0);
    REQUIRE(atom_at(p, 0.4) == 2);
    REQUIRE(atom_at(p, 0.95) == 1);
    Path empty;
    REQUIRE_FALSE(atom_at(empty, 0.5).has_value());
}
