#ifndef SAS_ENVIRONMENT_HPP
#define SAS_ENVIRONMENT_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "sas/action.hpp"
#include "sas/grid.hpp"
#include "sas/powerflow.hpp"
#include "sas/scenario.hpp"

namespace sas {

using Observation = std::vector<double>;

// Fixed feature layout of the observation vector; a pure function of the
// grid dimensions.
struct ObservationLayout {
    int lines = 0, substations = 0, generators = 0, loads = 0, slots = 0;

    int rho_offset() const { return 0; }
    int connected_offset() const { return lines; }
    int line_cooldown_offset() const { return 2 * lines; }
    int substation_cooldown_offset() const { return 3 * lines; }
    int gen_output_offset() const { return 3 * lines + substations; }
    int load_demand_offset() const { return gen_output_offset() + generators; }
    int bus_onehot_offset() const { return load_demand_offset() + loads; }
    int time_offset() const { return bus_onehot_offset() + 3 * slots; }
    int dim() const { return time_offset() + 3; }  // sin, cos, episode progress

    static ObservationLayout of(const GridSpec& spec) {
        return {spec.num_lines(), spec.num_substations(), spec.num_generators(),
                spec.num_loads(), spec.num_slots()};
    }
};

enum class ViolationKind : uint8_t {
    substation_cooldown,
    line_cooldown,
    redundant_line_status,
    generator_limit,
    ramp_limit,
    not_dispatchable,
    unknown_element,
};

const char* to_string(ViolationKind v);

struct Legality {
    bool legal = true;
    std::vector<ViolationKind> violations;
};

enum class TerminationReason : uint8_t { none, islanding, unserved_load, end_of_scenario };

const char* to_string(TerminationReason r);

struct StepInfo {
    double risk = 0.0;            // max rho after the step
    int overloaded_lines = 0;     // lines with rho > 1
    double action_cost = 0.0;     // c_t of the applied action
    bool action_replaced = false; // illegal action neutralized to do-nothing
    std::vector<int> tripped_lines;
};

struct StepOutcome {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    TerminationReason reason = TerminationReason::none;
    StepInfo info;
};

struct SimOutcome {
    Observation observation;
    double risk = 0.0;
    // static legality AND the simulated step does not collapse the grid
    bool legal = true;
    bool done = false;
    TerminationReason reason = TerminationReason::none;
    std::vector<ViolationKind> violations;
};

struct RewardConfig {
    double survival_bonus = 1.0;
    double topology_cost = 0.01;
    // cost per unit of |delta| / p_max for redispatch actions
    double redispatch_cost = 0.05;
};

struct EnvOptions {
    RewardConfig reward;
    int simulate_budget = 0;  // simulate() calls allowed per step; 0 = unlimited
    double balance_tolerance = 1e-6;
};

// The grid MDP. One instance is single-threaded; independent instances may
// run concurrently. Copies are independent (the grid spec and scenario are
// shared immutably).
class Environment {
public:
    Environment(GridSpec spec, Scenario scenario, uint64_t seed, EnvOptions options = {});

    const GridSpec& spec() const { return *spec_; }
    const Scenario& scenario() const { return *scenario_; }
    const EnvOptions& options() const { return options_; }

    const Observation& observation() const { return core_.obs; }
    const TopologyState& topology() const { return core_.topo; }
    const PowerFlowResult& power_flow() const { return core_.pf; }
    double current_risk() const { return core_.risk; }
    double dispatch_target(int gen) const { return core_.dispatch[static_cast<size_t>(gen)]; }
    double generator_output(int gen) const { return core_.output[static_cast<size_t>(gen)]; }
    int current_step() const { return core_.t; }
    int steps_taken() const { return steps_taken_; }
    bool done() const { return core_.done; }
    TerminationReason reason() const { return core_.reason; }
    int slack_generator() const { return slack_gen_; }
    int simulations_used_this_step() const { return sim_used_; }

    // Advances the MDP one step. Throws EpisodeFinished once done.
    StepOutcome step(const Action& action);

    // One-step forecast on a copy of the state: current demands and
    // renewable caps persisted forward, scheduled attacks invisible.
    // Leaves the environment untouched apart from the per-step simulation
    // budget. Throws SimulationBudgetExhausted when a finite budget runs out.
    SimOutcome simulate(const Action& action);

    // Static rule check (cooldowns, redundant toggles, dispatch limits).
    // Islanding and unserved load are only detectable via simulate().
    Legality is_legal(const Action& action) const;

    static int observation_dim(const GridSpec& spec) { return ObservationLayout::of(spec).dim(); }

private:
    struct Core {
        TopologyState topo;
        std::vector<double> dispatch;  // per generator setpoint, MW
        std::vector<double> output;    // realized output, MW
        PowerFlowResult pf;
        Observation obs;
        double risk = 0.0;
        int t = 0;
        bool done = false;
        TerminationReason reason = TerminationReason::none;
    };

    StepOutcome transition(Core& core, const Action& action, bool forecast) const;
    Legality legality_of(const Core& core, const Action& action) const;
    void balance_and_solve(Core& core, StepInfo& info, int chronics_row) const;
    void rebuild_observation(Core& core, int chronics_row) const;
    double action_cost(const Action& action) const;
    double renewable_cap(int gen, int t) const;
    double effective_max(int gen, int t) const;
    double demand(int load, int t) const;

    std::shared_ptr<const GridSpec> spec_;
    std::shared_ptr<const Scenario> scenario_;
    EnvOptions options_;
    ObservationLayout layout_;
    std::vector<double> load_peak_;
    int slack_gen_ = -1;
    uint64_t seed_ = 0;
    Core core_;
    int steps_taken_ = 0;
    int sim_used_ = 0;
};

}  // namespace sas

#endif
