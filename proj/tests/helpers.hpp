#ifndef SAS_TESTS_HELPERS_HPP
#define SAS_TESTS_HELPERS_HPP

#include <cstring>
#include <vector>

#include "sas/environment.hpp"
#include "sas/grid.hpp"
#include "sas/scenario.hpp"

namespace sas::testing {

// 3 substations in a ring, unit reactances; no generators or loads, so
// injections are crafted by hand. Line 0: 0-1, line 1: 0-2, line 2: 2-1.
inline GridSpec triangle_grid(double limit = 1.0) {
    return GridSpec({{0}, {1}, {2}},
                    {{0, 0, 1, 1.0, limit}, {1, 0, 2, 1.0, limit}, {2, 2, 1, 1.0, limit}}, {}, {});
}

// gen at sub 0 feeding a load at sub 1 over two parallel lines; line 0
// (x=0.1) carries 80% of the transfer, line 1 (x=0.4) the remaining 20%.
inline GridSpec two_line_grid() {
    return GridSpec({{0}, {1}}, {{0, 0, 1, 0.1, 0.6}, {1, 0, 1, 0.4, 1.5}},
                    {{0, 0, 0.0, 150.0, 15.0, false}}, {{0, 1}});
}

// constant demands, no renewable series, no attacks
inline Scenario flat_scenario(const GridSpec& spec, int length, double total_demand_mw) {
    Scenario s;
    s.name = "flat";
    s.length = length;
    const double per_load = total_demand_mw / spec.num_loads();
    s.load_mw.assign(static_cast<size_t>(spec.num_loads()),
                     std::vector<double>(static_cast<size_t>(length), per_load));
    s.renew_cap_mw.assign(static_cast<size_t>(spec.num_generators()), {});
    for (const auto& g : spec.generators())
        if (g.renewable)
            s.renew_cap_mw[static_cast<size_t>(g.id)]
                .assign(static_cast<size_t>(length), 0.5 * g.p_max);
    return s;
}

// single-load scenario with a scripted demand series
inline Scenario scripted_scenario(const GridSpec& spec, std::vector<double> demand) {
    Scenario s;
    s.name = "scripted";
    s.length = static_cast<int>(demand.size());
    s.load_mw.assign(static_cast<size_t>(spec.num_loads()), demand);
    s.renew_cap_mw.assign(static_cast<size_t>(spec.num_generators()), {});
    for (const auto& g : spec.generators())
        if (g.renewable)
            s.renew_cap_mw[static_cast<size_t>(g.id)]
                .assign(demand.size(), 0.5 * g.p_max);
    return s;
}

inline bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace sas::testing

#endif
