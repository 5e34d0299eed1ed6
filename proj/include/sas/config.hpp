#ifndef SAS_CONFIG_HPP
#define SAS_CONFIG_HPP

#include <array>
#include <filesystem>
#include <map>
#include <string>

#include "sas/es.hpp"
#include "sas/grid.hpp"

namespace sas {

// One run, one artifact: a flat key = value file mirrors this struct;
// command-line flags override file values, GRIDSAS_* environment variables
// sit between the two (file < env < flags).
struct RunConfig {
    std::string grid = "case5";  // preset name or grid file path
    std::string scenario_dir;
    std::string out_dir = "out";
    int workers = 1;
    bool process_workers = false;  // default transport is the in-process pool
    std::array<int, 3> hidden = {256, 128, 64};
    bool include_redispatch = false;
    int simulate_budget = 0;
    int checkpoint_interval = 10;
    TrainConfig train;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_text(const RunConfig& cfg);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

// GRIDSAS_OUT_DIR and GRIDSAS_WORKERS
void apply_env_overrides(RunConfig& cfg);

// `name` is a preset (case5, case14) or a grid file path
GridSpec resolve_grid(const std::string& name);

}  // namespace sas

#endif
