#include "hwd/error.hpp"
#include "hwd/pipeline.hpp"
#include "hwd/synth.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hwd;
namespace fs = std::filesystem;

namespace {

const fs::path& scenario_dir() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / "hwd_pipeline_test";
        fs::remove_all(d);
        synth::ScenarioSpec spec;
        spec.seed = 11;
        const char* bounds[] = {"2010-01-01", "2011-01-01", "2012-01-01", "2013-01-01"};
        for (int r = 0; r < 3; ++r) {
            synth::RoundSpec rs;
            rs.start = parse_date(bounds[r]);
            rs.end = parse_date(bounds[r + 1]);
            rs.n = 300;
            rs.type_shares = {{"A", 0.6}, {"B", 0.4}};
            rs.stock_shares = {{"A", 0.5}, {"B", 0.5}};
            rs.log_index = 0.05 * r;
            spec.rounds.push_back(rs);
        }
        synth::HedonicTruth truth;
        truth.beta = {{"log_area", 0.8}, {"age", -0.01}};
        truth.surface = true;
        truth.noise = 0.1;
        spec.hedonic = truth;
        synth::write_scenario_files(synth::generate(spec), d.string());
        return d;
    }();
    return dir;
}

Json base_json() {
    std::ifstream in(scenario_dir() / "config.json");
    Json j;
    in >> j;
    j["bootstrap"] = 100;
    return j;
}

RunConfig config(const Json& j, const std::string& out) {
    auto c = config_from_json(j, scenario_dir());
    c.out = scenario_dir() / out;
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HWD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("configuration errors") {
    SUBCASE("missing input file") {
        auto j = base_json();
        j["transactions"] = "nope.csv";
        CHECK_THROWS_AS(config(j, "o").validate(), ConfigError);
    }
    SUBCASE("negative aversion") {
        auto j = base_json();
        j["nu_grid"] = {0.5, -1.0};
        CHECK_THROWS_WITH_AS(config(j, "o").validate(), doctest::Contains("non-negative"), ConfigError);
    }
    SUBCASE("too few replications") {
        auto j = base_json();
        j["bootstrap"] = 50;
        CHECK_THROWS_AS(config(j, "o").validate(), ConfigError);
    }
    SUBCASE("order out of range") {
        auto j = base_json();
        j["orders"] = {1, 4};
        CHECK_THROWS_AS(config(j, "o").validate(), ConfigError);
    }
    SUBCASE("unknown design") { CHECK_THROWS_AS(parse_design("sideways"), ConfigError); }
    SUBCASE("malformed json") {
        auto j = base_json();
        j["rounds"] = "2010";
        CHECK_THROWS_AS(config(j, "o"), ConfigError);
    }
}

TEST_CASE("empty round is reported with its id") {
    auto j = base_json();
    j["rounds"].push_back({{"id", 3}, {"start", "2013-01-01"}, {"end", "2014-01-01"}});
    Pipeline p(config(j, "empty"));
    CHECK_THROWS_WITH_AS(p.welfare(), doctest::Contains("no observations in round 3"), DataError);
}

TEST_CASE("commands write their outputs") {
    Pipeline p(config(base_json(), "all"));
    const auto ingest = p.ingest();
    CHECK(ingest["accepted"] == 900);
    const auto sd = p.sd();
    REQUIRE(sd["cells"].size() == 6); // rounds 1, 2 at three orders
    for (const auto& cell : sd["cells"]) {
        CHECK(cell["I"] == Json::array({0}));
        CHECK(cell["p_value"].get<double>() >= 0.0);
        CHECK(cell["p_value"].get<double>() <= 1.0);
    }
    const auto hedonic = p.hedonic();
    CHECK(hedonic["cells"].size() == 3);
    for (const char* name : {"ingest.json", "sd_vs-base_prices.json", "sd_vs-base_prices.csv", "hedonic.json",
                             "residuals_public_cpi_r0.csv"}) {
        INFO(name);
        CHECK(fs::exists(scenario_dir() / "all" / name));
    }
    CHECK_THROWS_AS(p.sample(Sector::Private, DeflatorKind::CPI, 1), DataError);
}

TEST_CASE("vs-all design compares against every earlier round") {
    auto j = base_json();
    j["design"] = "vs-all";
    j["orders"] = {2};
    Pipeline p(config(j, "vsall"));
    const auto sd = p.sd();
    REQUIRE(sd["cells"].size() == 2);
    CHECK(sd["cells"][0]["I"] == Json::array({0}));
    CHECK(sd["cells"][1]["I"] == Json::array({0, 1}));
}

TEST_CASE("results do not depend on the thread count") {
    auto j = base_json();
    j["threads"] = 1;
    Pipeline one(config(j, "t1"));
    j["threads"] = 3;
    Pipeline three(config(j, "t3"));
    CHECK(one.welfare().dump() == three.welfare().dump());
    CHECK(one.sd().dump() == three.sd().dump());
}

TEST_CASE("command-line exit codes") {
    const auto cfg = (scenario_dir() / "config.json").string();
    const auto out = (scenario_dir() / "cli").string();
    CHECK(run_cli("welfare --config " + cfg + " --bootstrap 100 --out " + out) == 0);
    CHECK(fs::exists(scenario_dir() / "cli" / "welfare.json"));
    CHECK(run_cli("welfare --config " + cfg + " --bootstrap 10 --out " + out) == 2);
    CHECK(run_cli("welfare --config /nonexistent.json") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("sd --config " + cfg + " --orders 5 --out " + out) == 2);

    auto j = base_json();
    j["rounds"].push_back({{"id", 3}, {"start", "2013-01-01"}, {"end", "2014-01-01"}});
    const auto bad = scenario_dir() / "empty_round.json";
    std::ofstream(bad) << j.dump();
    CHECK(run_cli("welfare --config " + bad.string() + " --out " + out) == 3);
}

namespace {

/// Writes a scenario with `rounds` yearly rounds of n lognormal prices each and
/// returns the config for it. `scale` multiplies prices in the last round.
RunConfig yearly_rounds(const std::string& name, std::uint64_t seed, int rounds, std::size_t n, double scale) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    synth::ScenarioSpec spec;
    spec.seed = seed;
    for (int r = 0; r < rounds; ++r) {
        synth::RoundSpec rs;
        rs.start = Date{std::chrono::year(2005 + r), std::chrono::January, std::chrono::day(1)};
        rs.end = Date{std::chrono::year(2006 + r), std::chrono::January, std::chrono::day(1)};
        rs.n = n;
        rs.law = synth::Law::lognormal(13.0, 0.4);
        if (r == rounds - 1) rs.law = rs.law.scaled(scale);
        rs.type_shares = {{"A", 1.0}};
        rs.stock_shares = rs.type_shares;
        spec.rounds.push_back(rs);
    }
    synth::write_scenario_files(synth::generate(spec), dir.string());
    auto config = load_config(dir / "config.json");
    config.bootstrap = 100;
    config.out = dir / "out";
    return config;
}

} // namespace

TEST_CASE("identical rounds give ratios near one and rarely reject") {
    int clean_seeds = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        Pipeline p(yearly_rounds("hwd_identical_rounds", 100 + seed, 3, 10000, 1.0));
        bool rejected = false;
        const auto report = p.welfare();
        for (const auto& cell : report["cells"]) {
            const double psi = cell["psi_hat"].get<double>();
            CHECK(psi >= 0.98);
            CHECK(psi <= 1.02);
            rejected = rejected || cell["p_value"].get<double>() <= 0.01;
        }
        if (!rejected) ++clean_seeds;
    }
    CHECK(clean_seeds >= 19);
}

TEST_CASE("a round generated ten percent below base") {
    Pipeline p(yearly_rounds("hwd_scaled_round", 7, 6, 10000, 0.9));
    bool found = false;
    const auto report = p.welfare();
    for (const auto& cell : report["cells"]) {
        if (cell["round"] != 5 || cell["nu"] != 0.0) continue;
        found = true;
        CHECK(std::abs(cell["psi_hat"].get<double>() - 0.9) <= 0.02);
        CHECK(cell["p_value"].get<double>() <= 0.01);
    }
    CHECK(found);
}
