#ifndef SAS_POWERFLOW_HPP
#define SAS_POWERFLOW_HPP

#include <vector>

#include "sas/grid.hpp"

namespace sas {

// Net real-power injection per (substation, bus) node, per-unit.
// Positive = generation, negative = load.
struct InjectionVector {
    std::vector<double> p_node;

    static InjectionVector zeros(const GridSpec& spec) {
        return {std::vector<double>(static_cast<size_t>(spec.num_nodes()), 0.0)};
    }
};

struct PowerFlowResult {
    std::vector<double> flow;  // per line, per-unit, signed from the first endpoint
    std::vector<double> rho;   // |flow| / thermal limit; 0 on disconnected lines
    bool converged = true;
};

// Linear (DC) power flow. Solves B * theta = P independently on every
// island with the island's slack node pinned to theta = 0; the slack
// absorbs any injection imbalance. Slack choice: lowest-indexed node
// carrying a generator, else the island's lowest-indexed node.
// Throws SingularSystem when the reduced susceptance matrix cannot be
// factorized (corrupt input; impossible with positive reactances).
PowerFlowResult solve_dc(const GridSpec& spec, const TopologyState& topo,
                         const InjectionVector& injections);

// Maximum loading ratio over connected lines; 0 when nothing is connected.
// Throws NotConverged if the result is unconverged.
double compute_risk(const PowerFlowResult& pf);

}  // namespace sas

#endif
