#include "sas/action.hpp"

#include <sstream>

#include "sas/errors.hpp"

namespace sas {

std::string describe(const GridSpec& spec, const Action& action) {
    std::ostringstream out;
    switch (action.kind) {
        case ActionKind::do_nothing:
            out << "do-nothing";
            break;
        case ActionKind::bus_reconfig: {
            out << "substation " << action.substation << ": buses";
            const auto& slots = spec.substation_slots(action.substation);
            for (size_t i = 0; i < slots.size(); ++i) {
                const auto& slot = spec.slot(slots[i]);
                out << ' ';
                switch (slot.kind) {
                    case SlotKind::line_end: out << 'l' << slot.element << (slot.end == 0 ? 'a' : 'b'); break;
                    case SlotKind::generator: out << 'g' << slot.element; break;
                    case SlotKind::load: out << 'd' << slot.element; break;
                }
                out << "->" << int(action.target_bus[i]);
            }
            break;
        }
        case ActionKind::set_line_status:
            out << (action.connect ? "reconnect" : "disconnect") << " line " << action.line;
            break;
        case ActionKind::redispatch:
            out << "redispatch generator " << action.generator << " by " << action.delta_mw << " MW";
            break;
    }
    return out.str();
}

TopologyState apply_topology_action(const GridSpec& spec, const TopologyState& topo,
                                    const Action& action) {
    TopologyState next = topo;
    switch (action.kind) {
        case ActionKind::do_nothing:
        case ActionKind::redispatch:
            return next;
        case ActionKind::bus_reconfig: {
            if (action.substation < 0 || action.substation >= spec.num_substations())
                throw UnknownElement("substation " + std::to_string(action.substation));
            const auto& slots = spec.substation_slots(action.substation);
            if (action.target_bus.size() != slots.size())
                throw UnknownElement("bus target size mismatch at substation " +
                                     std::to_string(action.substation));
            if (topo.substation_cooldown[static_cast<size_t>(action.substation)] > 0)
                throw CooldownViolation("substation " + std::to_string(action.substation) +
                                        " under cooldown");
            for (size_t i = 0; i < slots.size(); ++i) {
                const auto& slot = spec.slot(slots[i]);
                if (action.target_bus[i] != 1 && action.target_bus[i] != 2)
                    throw UnknownElement("bus target must be 1 or 2");
                if (slot.kind == SlotKind::line_end &&
                    !topo.line_connected[static_cast<size_t>(slot.element)])
                    continue;  // disconnected endpoints stay on bus 0
                next.bus_of[static_cast<size_t>(slots[i])] = action.target_bus[i];
            }
            next.substation_cooldown[static_cast<size_t>(action.substation)] =
                spec.substation_cooldown_steps;
            return next;
        }
        case ActionKind::set_line_status: {
            if (action.line < 0 || action.line >= spec.num_lines())
                throw UnknownElement("line " + std::to_string(action.line));
            if (topo.line_cooldown[static_cast<size_t>(action.line)] > 0)
                throw CooldownViolation("line " + std::to_string(action.line) + " under cooldown");
            const auto l = static_cast<size_t>(action.line);
            if (action.connect) {
                // reconnection lands on bus 1 at both ends
                next.line_connected[l] = 1;
                next.bus_of[static_cast<size_t>(spec.line_slot(action.line, 0))] = 1;
                next.bus_of[static_cast<size_t>(spec.line_slot(action.line, 1))] = 1;
            } else {
                next.line_connected[l] = 0;
                next.bus_of[static_cast<size_t>(spec.line_slot(action.line, 0))] = 0;
                next.bus_of[static_cast<size_t>(spec.line_slot(action.line, 1))] = 0;
                next.overload_counter[l] = 0;
            }
            next.line_cooldown[l] = spec.line_action_cooldown_steps;
            return next;
        }
    }
    throw Error("unreachable action kind");
}

}  // namespace sas
