#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sas/errors.hpp"
#include "sas/powerflow.hpp"
#include "sas/rng.hpp"

using namespace sas;
using namespace sas::testing;

namespace {

InjectionVector triangle_injection(const GridSpec& spec, double at_a, double at_b, double at_c) {
    InjectionVector inj = InjectionVector::zeros(spec);
    inj.p_node[static_cast<size_t>(spec.node_id(0, 1))] = at_a;
    inj.p_node[static_cast<size_t>(spec.node_id(1, 1))] = at_b;
    inj.p_node[static_cast<size_t>(spec.node_id(2, 1))] = at_c;
    return inj;
}

// random-but-valid topology: random bus moves plus a few line cuts
TopologyState random_topology(const GridSpec& spec, rng::Stream& rand, double cut_prob = 0.2) {
    TopologyState topo = TopologyState::reference(spec);
    for (int s = 0; s < spec.num_slots(); ++s)
        topo.bus_of[static_cast<size_t>(s)] = rand.uniform01() < 0.25 ? 2 : 1;
    for (int l = 0; l < spec.num_lines(); ++l) {
        if (rand.uniform01() < cut_prob) {
            topo.line_connected[static_cast<size_t>(l)] = 0;
            topo.bus_of[static_cast<size_t>(spec.line_slot(l, 0))] = 0;
            topo.bus_of[static_cast<size_t>(spec.line_slot(l, 1))] = 0;
        }
    }
    return topo;
}

InjectionVector random_injection(const GridSpec& spec, rng::Stream& rand) {
    InjectionVector inj = InjectionVector::zeros(spec);
    // put power on nodes that actually carry elements or endpoints
    for (int v = 0; v < spec.num_nodes(); ++v)
        inj.p_node[static_cast<size_t>(v)] = rand.uniform(-1.0, 1.0);
    return inj;
}

double kcl_residual(const GridSpec& spec, const TopologyState& topo, const InjectionVector& inj,
                    const PowerFlowResult& pf) {
    // worst Kirchhoff residual over non-slack nodes; slack nodes absorb
    // their island's imbalance by construction
    std::vector<double> net = inj.p_node;
    for (const auto& l : spec.lines()) {
        if (!topo.line_connected[static_cast<size_t>(l.id)]) continue;
        const int u = spec.node_id(l.from_substation,
                                   topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 0))]);
        const int v = spec.node_id(l.to_substation,
                                   topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 1))]);
        net[static_cast<size_t>(u)] -= pf.flow[static_cast<size_t>(l.id)];
        net[static_cast<size_t>(v)] += pf.flow[static_cast<size_t>(l.id)];
    }
    double worst = 0.0;
    for (const auto& island : electrical_islands(spec, topo)) {
        if (island.lines.empty()) continue;
        // first node with a generator is the slack, else the lowest node
        int slack = island.nodes.front();
        for (const int v : island.nodes) {
            bool has_gen = false;
            for (const auto& g : spec.generators()) {
                const int bus = topo.bus_of[static_cast<size_t>(spec.gen_slot(g.id))];
                if (spec.node_id(g.substation, bus) == v) has_gen = true;
            }
            if (has_gen) {
                slack = v;
                break;
            }
        }
        for (const int v : island.nodes)
            if (v != slack) worst = std::max(worst, std::abs(net[static_cast<size_t>(v)]));
    }
    return worst;
}

}  // namespace

TEST_CASE("null excitation gives null flows") {
    const GridSpec spec = triangle_grid();
    const TopologyState topo = TopologyState::reference(spec);
    const PowerFlowResult pf = solve_dc(spec, topo, InjectionVector::zeros(spec));
    for (const double f : pf.flow) CHECK(f == 0.0);
    for (const double r : pf.rho) CHECK(r == 0.0);
    CHECK(compute_risk(pf) == 0.0);
}

TEST_CASE("equal-reactance triangle splits 2/3 : 1/3") {
    const GridSpec spec = triangle_grid();
    const TopologyState topo = TopologyState::reference(spec);
    const InjectionVector inj = triangle_injection(spec, 1.0, -1.0, 0.0);

    const PowerFlowResult pf = solve_dc(spec, topo, inj);
    CHECK(pf.flow[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // A-B
    CHECK(pf.flow[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));  // A-C
    CHECK(pf.flow[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));  // C-B

    // independent dense elimination agrees
    const std::vector<double> oracle = oracle_dc_flows(spec, topo, inj.p_node);
    for (int l = 0; l < spec.num_lines(); ++l)
        CHECK(pf.flow[static_cast<size_t>(l)] ==
              doctest::Approx(oracle[static_cast<size_t>(l)]).epsilon(1e-11));
}

TEST_CASE("single remaining path carries everything") {
    const GridSpec spec = triangle_grid();
    TopologyState topo = TopologyState::reference(spec);
    topo.line_connected[0] = 0;
    topo.bus_of[static_cast<size_t>(spec.line_slot(0, 0))] = 0;
    topo.bus_of[static_cast<size_t>(spec.line_slot(0, 1))] = 0;

    const PowerFlowResult pf = solve_dc(spec, topo, triangle_injection(spec, 1.0, -1.0, 0.0));
    CHECK(pf.flow[0] == 0.0);
    CHECK(pf.flow[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pf.flow[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("risk is the maximum loading ratio") {
    PowerFlowResult pf;
    pf.rho = {0.6, 0.3};
    pf.flow = {0.6, 0.3};
    CHECK(compute_risk(pf) == 0.6);

    // |-120| / 100 dominates
    pf.flow = {-1.2, 0.5};
    pf.rho = {1.2, 0.5};
    CHECK(compute_risk(pf) == 1.2);

    PowerFlowResult bad;
    bad.converged = false;
    CHECK_THROWS_AS(compute_risk(bad), NotConverged);
}

TEST_CASE("triangle risk with tight limits is 4/3") {
    const GridSpec spec = triangle_grid(0.5);
    const TopologyState topo = TopologyState::reference(spec);
    const PowerFlowResult pf = solve_dc(spec, topo, triangle_injection(spec, 1.0, -1.0, 0.0));
    CHECK(compute_risk(pf) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("flow antisymmetry under endpoint reversal") {
    const GridSpec spec = triangle_grid();
    GridSpec flipped({{0}, {1}, {2}},
                     {{0, 1, 0, 1.0, 1.0}, {1, 0, 2, 1.0, 1.0}, {2, 2, 1, 1.0, 1.0}}, {}, {});
    const TopologyState topo = TopologyState::reference(spec);
    const InjectionVector inj = triangle_injection(spec, 1.0, -1.0, 0.0);

    const PowerFlowResult a = solve_dc(spec, topo, inj);
    const PowerFlowResult b = solve_dc(flipped, TopologyState::reference(flipped), inj);
    CHECK(b.flow[0] == doctest::Approx(-a.flow[0]).epsilon(1e-12));
    CHECK(b.rho[0] == doctest::Approx(a.rho[0]).epsilon(1e-12));
}

TEST_CASE("risk is invariant under uniform flow/limit scaling") {
    const GridSpec spec = triangle_grid();
    GridSpec scaled({{0}, {1}, {2}},
                    {{0, 0, 1, 1.0, 3.0}, {1, 0, 2, 1.0, 3.0}, {2, 2, 1, 1.0, 3.0}}, {}, {});
    const PowerFlowResult a =
        solve_dc(spec, TopologyState::reference(spec), triangle_injection(spec, 1.0, -1.0, 0.0));
    const PowerFlowResult b = solve_dc(scaled, TopologyState::reference(scaled),
                                       triangle_injection(scaled, 3.0, -3.0, 0.0));
    CHECK(compute_risk(a) == doctest::Approx(compute_risk(b)).epsilon(1e-12));
}

TEST_CASE("linearity, superposition, balance and oracle agreement on random cases") {
    for (const GridSpec& spec : {GridSpec::case5(), GridSpec::case14()}) {
        rng::Stream rand(spec.num_lines());  // distinct stream per grid
        for (int trial = 0; trial < 60; ++trial) {
            const TopologyState topo = random_topology(spec, rand);
            const InjectionVector i1 = random_injection(spec, rand);
            const InjectionVector i2 = random_injection(spec, rand);

            const PowerFlowResult f1 = solve_dc(spec, topo, i1);
            const PowerFlowResult f2 = solve_dc(spec, topo, i2);

            // linearity
            InjectionVector doubled = i1;
            for (auto& p : doubled.p_node) p *= 2.0;
            const PowerFlowResult fd = solve_dc(spec, topo, doubled);
            for (size_t l = 0; l < f1.flow.size(); ++l)
                CHECK(fd.flow[l] == doctest::Approx(2.0 * f1.flow[l]).epsilon(1e-9));

            // superposition
            InjectionVector sum = i1;
            for (size_t v = 0; v < sum.p_node.size(); ++v) sum.p_node[v] += i2.p_node[v];
            const PowerFlowResult fs = solve_dc(spec, topo, sum);
            for (size_t l = 0; l < f1.flow.size(); ++l)
                CHECK(fs.flow[l] == doctest::Approx(f1.flow[l] + f2.flow[l]).epsilon(1e-9).scale(1.0));

            // per-island Kirchhoff balance
            CHECK(kcl_residual(spec, topo, i1, f1) < 1e-9);

            // independent oracle
            const std::vector<double> oracle = oracle_dc_flows(spec, topo, i1.p_node);
            for (size_t l = 0; l < f1.flow.size(); ++l)
                CHECK(f1.flow[l] == doctest::Approx(oracle[l]).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("corrupt input surfaces as SingularSystem") {
    const GridSpec spec = triangle_grid();
    InjectionVector inj = InjectionVector::zeros(spec);
    // NaN on a non-slack node poisons the reduced system
    inj.p_node[static_cast<size_t>(spec.node_id(1, 1))] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_dc(spec, TopologyState::reference(spec), inj), SingularSystem);
}

TEST_CASE("injection size is checked") {
    const GridSpec spec = triangle_grid();
    InjectionVector inj;
    inj.p_node = {1.0};
    CHECK_THROWS_AS(solve_dc(spec, TopologyState::reference(spec), inj), Error);
}
