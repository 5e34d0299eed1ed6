#include "sas/powerflow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "sas/errors.hpp"

namespace sas {

namespace {

// Dense factorization is fine for desk-scale grids (<= 64 nodes per
// island). A sparse path would slot in here if larger cases ever land.
Eigen::VectorXd solve_reduced(const Eigen::MatrixXd& b, const Eigen::VectorXd& p) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    const Eigen::VectorXd theta = lu.solve(p);
    const double residual = (b * theta - p).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    if (!theta.allFinite() || residual > 1e-7 * scale)
        throw SingularSystem("reduced susceptance system is singular");
    return theta;
}

}  // namespace

PowerFlowResult solve_dc(const GridSpec& spec, const TopologyState& topo,
                         const InjectionVector& injections) {
    const int n_nodes = spec.num_nodes();
    if (injections.p_node.size() != static_cast<size_t>(n_nodes))
        throw Error("injection vector size mismatch");

    PowerFlowResult result;
    result.flow.assign(static_cast<size_t>(spec.num_lines()), 0.0);
    result.rho.assign(static_cast<size_t>(spec.num_lines()), 0.0);

    // generator presence per node decides slack priority
    std::vector<char> has_gen(static_cast<size_t>(n_nodes), 0);
    for (const auto& g : spec.generators()) {
        const int bus = topo.bus_of[static_cast<size_t>(spec.gen_slot(g.id))];
        if (bus == 1 || bus == 2) has_gen[static_cast<size_t>(spec.node_id(g.substation, bus))] = 1;
    }

    std::vector<double> theta(static_cast<size_t>(n_nodes), 0.0);
    for (const auto& island : electrical_islands(spec, topo)) {
        if (island.lines.empty()) continue;  // no lines, no flows; slack absorbs locally

        const auto& nodes = island.nodes;
        const int m = static_cast<int>(nodes.size());
        std::vector<int> local(static_cast<size_t>(n_nodes), -1);
        for (int i = 0; i < m; ++i) local[static_cast<size_t>(nodes[static_cast<size_t>(i)])] = i;

        int slack = nodes.front();
        for (const int v : nodes)
            if (has_gen[static_cast<size_t>(v)]) { slack = v; break; }  // nodes are sorted ascending
        const int slack_local = local[static_cast<size_t>(slack)];

        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
        for (const int lid : island.lines) {
            const auto& l = spec.line(lid);
            const int u = local[static_cast<size_t>(spec.node_id(
                l.from_substation, topo.bus_of[static_cast<size_t>(spec.line_slot(lid, 0))]))];
            const int v = local[static_cast<size_t>(spec.node_id(
                l.to_substation, topo.bus_of[static_cast<size_t>(spec.line_slot(lid, 1))]))];
            const double y = 1.0 / l.reactance;
            b(u, u) += y;
            b(v, v) += y;
            b(u, v) -= y;
            b(v, u) -= y;
        }

        // reduce out the slack row/column
        Eigen::MatrixXd b_red(m - 1, m - 1);
        Eigen::VectorXd p_red(m - 1);
        for (int i = 0, ri = 0; i < m; ++i) {
            if (i == slack_local) continue;
            p_red(ri) = injections.p_node[static_cast<size_t>(nodes[static_cast<size_t>(i)])];
            for (int j = 0, rj = 0; j < m; ++j) {
                if (j == slack_local) continue;
                b_red(ri, rj++) = b(i, j);
            }
            ++ri;
        }

        if (m > 1) {
            const Eigen::VectorXd theta_red = solve_reduced(b_red, p_red);
            for (int i = 0, ri = 0; i < m; ++i) {
                if (i == slack_local) continue;
                theta[static_cast<size_t>(nodes[static_cast<size_t>(i)])] = theta_red(ri++);
            }
        }
    }

    for (const auto& l : spec.lines()) {
        if (!topo.line_connected[static_cast<size_t>(l.id)]) continue;
        const int u = spec.node_id(l.from_substation,
                                   topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 0))]);
        const int v = spec.node_id(l.to_substation,
                                   topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 1))]);
        const double f = (theta[static_cast<size_t>(u)] - theta[static_cast<size_t>(v)]) / l.reactance;
        result.flow[static_cast<size_t>(l.id)] = f;
        result.rho[static_cast<size_t>(l.id)] = std::abs(f) / l.thermal_limit;
    }
    return result;
}

double compute_risk(const PowerFlowResult& pf) {
    if (!pf.converged) throw NotConverged("power flow did not converge");
    double risk = 0.0;
    for (const double r : pf.rho) risk = std::max(risk, r);
    return risk;
}

}  // namespace sas
