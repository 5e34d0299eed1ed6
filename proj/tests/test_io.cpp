#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "sas/config.hpp"
#include "sas/errors.hpp"
#include "sas/logio.hpp"
#include "sas/scenario.hpp"

using namespace sas;
using namespace sas::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sas_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("shipped preset files parse back to the built-in grids") {
    for (const auto& [name, preset] :
         {std::pair{"case5", GridSpec::case5()}, std::pair{"case14", GridSpec::case14()}}) {
        const fs::path path = fs::path(SAS_DATA_DIR) / (std::string(name) + ".grid");
        const GridSpec from_file = GridSpec::from_file(path);
        CHECK(from_file.num_substations() == preset.num_substations());
        CHECK(from_file.num_lines() == preset.num_lines());
        CHECK(from_file.num_generators() == preset.num_generators());
        CHECK(from_file.num_loads() == preset.num_loads());
        for (int l = 0; l < preset.num_lines(); ++l) {
            CHECK(from_file.line(l).reactance == preset.line(l).reactance);
            CHECK(from_file.line(l).thermal_limit == preset.line(l).thermal_limit);
        }
        for (int g = 0; g < preset.num_generators(); ++g) {
            CHECK(from_file.generator(g).p_max == preset.generator(g).p_max);
            CHECK(from_file.generator(g).ramp_limit == preset.generator(g).ramp_limit);
            CHECK(from_file.generator(g).renewable == preset.generator(g).renewable);
        }
    }
}

TEST_CASE("scenario files round-trip and generation is deterministic") {
    const GridSpec spec = GridSpec::case14();
    ScenarioGenOptions options;
    options.count = 2;
    options.length = 96;
    options.attack_rate = 8.0;
    const auto dir = scratch_dir("scenario");

    const auto scenarios = generate_scenarios(spec, options, 42);
    REQUIRE(scenarios.size() == 2);
    for (size_t i = 0; i < scenarios.size(); ++i)
        save_scenario(spec, scenarios[i], dir, static_cast<int>(i));

    SUBCASE("lossless reload") {
        CHECK(count_scenarios(dir) == 2);
        const Scenario back = load_scenario(spec, dir, 0);
        CHECK(back.length == scenarios[0].length);
        CHECK(back.load_mw == scenarios[0].load_mw);
        CHECK(back.renew_cap_mw == scenarios[0].renew_cap_mw);
        REQUIRE(back.attacks.size() == scenarios[0].attacks.size());
        for (size_t a = 0; a < back.attacks.size(); ++a) {
            CHECK(back.attacks[a].step == scenarios[0].attacks[a].step);
            CHECK(back.attacks[a].line == scenarios[0].attacks[a].line);
            CHECK(back.attacks[a].duration == scenarios[0].attacks[a].duration);
        }
    }
    SUBCASE("same seed, byte-identical files") {
        const auto dir2 = scratch_dir("scenario2");
        const auto again = generate_scenarios(spec, options, 42);
        for (size_t i = 0; i < again.size(); ++i) save_scenario(spec, again[i], dir2, static_cast<int>(i));
        CHECK(slurp(dir / "chronics_000.csv") == slurp(dir2 / "chronics_000.csv"));
        CHECK(slurp(dir / "attacks_000.csv") == slurp(dir2 / "attacks_000.csv"));
        fs::remove_all(dir2);
    }
    SUBCASE("different seed, different chronics") {
        const auto other = generate_scenarios(spec, options, 43);
        CHECK(other[0].load_mw != scenarios[0].load_mw);
    }
    fs::remove_all(dir);
}

TEST_CASE("attack schedule options") {
    const GridSpec spec = GridSpec::case5();
    ScenarioGenOptions options;
    options.count = 3;
    options.length = kStepsPerDay;  // one simulated day

    SUBCASE("zero rate means no attacks") {
        options.attack_rate = 0.0;
        for (const auto& s : generate_scenarios(spec, options, 9)) CHECK(s.attacks.empty());
    }
    SUBCASE("min_attacks floors the count") {
        options.attack_rate = 0.0;
        options.min_attacks = 1;
        for (const auto& s : generate_scenarios(spec, options, 9)) CHECK(s.attacks.size() >= 1);
    }
    SUBCASE("attack lines are restricted and outages never overlap") {
        options.attack_rate = 20.0;
        options.attack_lines = {1, 4};
        for (const auto& s : generate_scenarios(spec, options, 11)) {
            int clear_at = 0;
            for (const auto& a : s.attacks) {
                CHECK((a.line == 1 || a.line == 4));
                CHECK(a.step >= clear_at);
                clear_at = a.step + a.duration + kLineRecoverySteps;
            }
        }
    }
    SUBCASE("one day at 5-minute resolution is 288 rows") {
        const auto scenarios = generate_scenarios(spec, options, 1);
        CHECK(scenarios[0].length == 288);
        CHECK(scenarios[0].load_mw[0].size() == 288);
    }
}

TEST_CASE("metrics and replay logs parse back losslessly") {
    const auto dir = scratch_dir("logs");

    {
        MetricsWriter writer(dir / "metrics.csv");
        writer.append({0, 10.5, 1.25, 12.0, 0.75, 33.0});
        writer.append({1, 11.0, 1.0, 13.5, 0.5, 34.5});
    }
    {
        // append-only: reopening adds rows without rewriting the header
        MetricsWriter writer(dir / "metrics.csv");
        writer.append({2, 12.25, 0.875, 14.0, 0.25, 35.0});
    }
    const auto metrics = read_metrics(dir / "metrics.csv");
    REQUIRE(metrics.size() == 3);
    CHECK(metrics[0].mean_return == 10.5);
    CHECK(metrics[2].iteration == 2);
    CHECK(metrics[2].wall_ms == 35.0);

    {
        ReplayWriter writer(dir / "replay.csv");
        writer.append({1, 7, 0.99, 0.625, false, 8, 5, 0.5, false});
        writer.append({2, 0, 0.0, 1.5, true, 8, 0, 1.25, true});
    }
    const auto replay = read_replay(dir / "replay.csv");
    REQUIRE(replay.size() == 2);
    CHECK(replay[0].action_index == 7);
    CHECK(replay[0].reward == 0.99);
    CHECK(replay[1].done);
    CHECK(replay[1].fallback);
    CHECK(replay[1].predicted_risk == 1.25);

    CHECK_THROWS_AS(read_metrics(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("run config file round-trips and applies overrides") {
    RunConfig cfg;
    cfg.grid = "case14";
    cfg.scenario_dir = "scen";
    cfg.out_dir = "runs/a";
    cfg.workers = 3;
    cfg.hidden = {48, 32, 24};
    cfg.include_redispatch = true;
    cfg.train.population = 24;
    cfg.train.sigma = 0.2;
    cfg.train.k = 64;
    cfg.train.seed = 17;
    cfg.train.rank_shaping = false;

    const RunConfig back = parse_run_config(to_text(cfg));
    CHECK(back.grid == cfg.grid);
    CHECK(back.workers == 3);
    CHECK(back.hidden == cfg.hidden);
    CHECK(back.include_redispatch);
    CHECK(back.train.population == 24);
    CHECK(back.train.sigma == 0.2);
    CHECK(back.train.k == 64);
    CHECK(back.train.seed == 17);
    CHECK_FALSE(back.train.rank_shaping);

    SUBCASE("comments and blanks are fine, junk is not") {
        CHECK_NOTHROW(parse_run_config("# comment\n\nseed = 5\n"));
        CHECK_THROWS_AS(parse_run_config("nonsense\n"), ParseError);
        CHECK_THROWS_AS(parse_run_config("unknown_key = 1\n"), ParseError);
    }
    SUBCASE("environment variables override the file") {
        RunConfig env_cfg = parse_run_config("out = from_file\nworkers = 1\n");
        setenv("GRIDSAS_OUT_DIR", "from_env", 1);
        setenv("GRIDSAS_WORKERS", "7", 1);
        apply_env_overrides(env_cfg);
        unsetenv("GRIDSAS_OUT_DIR");
        unsetenv("GRIDSAS_WORKERS");
        CHECK(env_cfg.out_dir == "from_env");
        CHECK(env_cfg.workers == 7);
    }
}

TEST_CASE("resolve_grid accepts presets and files") {
    CHECK(resolve_grid("case5").num_substations() == 5);
    CHECK(resolve_grid("case14").num_substations() == 14);
    CHECK_THROWS_AS(resolve_grid("/no/such/grid"), IoError);
}
