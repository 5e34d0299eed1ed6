#ifndef SAS_SCENARIO_HPP
#define SAS_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sas/grid.hpp"

namespace sas {

struct Attack {
    int step = 0;      // step at which the line is forced out
    int line = 0;
    int duration = 1;  // steps the line stays out, counting the attack step
};

// Chronics for one episode: per-step demands, renewable availability and
// the attack schedule. Step 0 is the reset state; an episode of length T
// therefore supports T-1 transitions.
struct Scenario {
    std::string name;
    int length = 0;                                 // T
    std::vector<std::vector<double>> load_mw;       // [load][t]
    std::vector<std::vector<double>> renew_cap_mw;  // [generator][t]; empty for non-renewables
    std::vector<Attack> attacks;

    double peak_load(int load) const;
};

// Throws Error if the scenario is inconsistent with the grid.
void check_scenario(const GridSpec& spec, const Scenario& scenario);

// file formats: chronics_XXX.csv / attacks_XXX.csv (see README)
void save_scenario(const GridSpec& spec, const Scenario& scenario,
                   const std::filesystem::path& dir, int index);
Scenario load_scenario(const GridSpec& spec, const std::filesystem::path& dir, int index);
// all scenarios in a directory, ordered by index
std::vector<Scenario> load_scenario_dir(const GridSpec& spec, const std::filesystem::path& dir);
int count_scenarios(const std::filesystem::path& dir);

struct ScenarioGenOptions {
    int count = 8;
    int length = kStepsPerDay;
    double attack_rate = 2.0;        // expected attacks per simulated day
    int attack_duration_min = 12;
    int attack_duration_max = 24;
    double utilization = 0.55;       // mean total demand / total generator capacity
    double daily_swing = 0.25;       // sinusoid amplitude relative to the mean
    double noise = 0.02;             // per-step multiplicative demand noise
    double renew_walk = 0.05;        // renewable walk step, fraction of p_max
    int min_attacks = 0;             // floor on attacks per scenario
    std::vector<int> attack_lines;   // restrict attacks to these lines; empty = all
    std::vector<double> load_shares; // per-load fraction of total demand; empty = random
};

// Deterministic in (spec, options, seed): demand = daily sinusoid x noise,
// renewable caps = bounded random walks, attacks sampled per simulated day.
std::vector<Scenario> generate_scenarios(const GridSpec& spec, const ScenarioGenOptions& options,
                                         uint64_t seed);

}  // namespace sas

#endif
