#include "sas/catalogue.hpp"

#include <algorithm>
#include <sstream>

#include "sas/errors.hpp"

namespace sas {

const Action& ActionCatalogue::at(int index) const {
    if (index < 0 || index >= size())
        throw OutOfRange("action index " + std::to_string(index) + " of " + std::to_string(size()));
    return actions_[static_cast<size_t>(index)];
}

int ActionCatalogue::index_of(const Action& action) const {
    const Action canonical = canonicalize(action);
    const auto it = std::find(actions_.begin(), actions_.end(), canonical);
    if (it == actions_.end()) throw NotInCatalogue("action not in catalogue");
    return static_cast<int>(it - actions_.begin());
}

Action canonicalize(Action action) {
    if (action.kind != ActionKind::bus_reconfig || action.target_bus.empty()) return action;
    if (action.target_bus.front() == 2)
        for (auto& b : action.target_bus) b = (b == 1) ? 2 : 1;
    return action;
}

ActionCatalogue build_catalogue(const GridSpec& spec, const CatalogueOptions& options) {
    std::vector<Action> actions;
    actions.push_back(Action::nothing());

    // Unique single-substation bus configurations. Pinning slot 0 to bus 1
    // removes the bus-1/2 relabeling symmetry; mask 0 is the all-bus-1
    // reference and is skipped. A substation with n slots contributes
    // 2^(n-1) - 1 actions.
    for (int s = 0; s < spec.num_substations(); ++s) {
        const auto& slots = spec.substation_slots(s);
        if (slots.size() < 2) continue;
        const uint64_t configs = 1ull << (slots.size() - 1);
        for (uint64_t mask = 1; mask < configs; ++mask) {
            std::vector<uint8_t> target(slots.size(), 1);
            for (size_t i = 1; i < slots.size(); ++i)
                if (mask & (1ull << (i - 1))) target[i] = 2;
            actions.push_back(Action::reconfigure(s, std::move(target)));
        }
    }

    if (options.include_line_toggles) {
        for (int l = 0; l < spec.num_lines(); ++l) {
            actions.push_back(Action::line_status(l, false));
            actions.push_back(Action::line_status(l, true));
        }
    }

    if (options.include_redispatch) {
        for (const auto& g : spec.generators()) {
            if (g.renewable || g.ramp_limit <= 0.0) continue;
            for (const double f : options.redispatch_fractions)
                actions.push_back(Action::redispatch(g.id, f * g.ramp_limit));
        }
    }
    return ActionCatalogue(std::move(actions));
}

std::string dump_catalogue(const GridSpec& spec, const ActionCatalogue& catalogue) {
    std::ostringstream out;
    out << "index  kind             target  description\n";
    for (int i = 0; i < catalogue.size(); ++i) {
        const auto& a = catalogue.at(i);
        std::string kind, target;
        switch (a.kind) {
            case ActionKind::do_nothing: kind = "do-nothing"; target = "-"; break;
            case ActionKind::bus_reconfig:
                kind = "bus-reconfig";
                target = "sub " + std::to_string(a.substation);
                break;
            case ActionKind::set_line_status:
                kind = a.connect ? "line-connect" : "line-disconnect";
                target = "line " + std::to_string(a.line);
                break;
            case ActionKind::redispatch:
                kind = "redispatch";
                target = "gen " + std::to_string(a.generator);
                break;
        }
        out << i << "\t" << kind << "\t" << target << "\t" << describe(spec, a) << "\n";
    }
    return out.str();
}

}  // namespace sas
