#ifndef SAS_ACTION_HPP
#define SAS_ACTION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sas/grid.hpp"

namespace sas {

enum class ActionKind : uint8_t { do_nothing, bus_reconfig, set_line_status, redispatch };

struct Action {
    ActionKind kind = ActionKind::do_nothing;

    // bus_reconfig: target bus (1 or 2) per slot of `substation`,
    // in GridSpec::substation_slots order
    int substation = -1;
    std::vector<uint8_t> target_bus;

    // set_line_status
    int line = -1;
    bool connect = false;

    // redispatch
    int generator = -1;
    double delta_mw = 0.0;

    bool operator==(const Action&) const = default;

    static Action nothing() { return {}; }
    static Action reconfigure(int substation, std::vector<uint8_t> target) {
        Action a;
        a.kind = ActionKind::bus_reconfig;
        a.substation = substation;
        a.target_bus = std::move(target);
        return a;
    }
    static Action line_status(int line, bool connect) {
        Action a;
        a.kind = ActionKind::set_line_status;
        a.line = line;
        a.connect = connect;
        return a;
    }
    static Action redispatch(int generator, double delta_mw) {
        Action a;
        a.kind = ActionKind::redispatch;
        a.generator = generator;
        a.delta_mw = delta_mw;
        return a;
    }
};

std::string describe(const GridSpec& spec, const Action& action);

// Applies a topology-changing action and returns the new state. Bus
// reconfigurations set the substation cooldown, manual line status changes
// set the line cooldown. Skips slots of disconnected lines when assigning
// buses. do-nothing and redispatch leave the state untouched.
// Throws CooldownViolation if the target is locked, UnknownElement for a
// bad target.
TopologyState apply_topology_action(const GridSpec& spec, const TopologyState& topo,
                                    const Action& action);

}  // namespace sas

#endif
