#include "sas/environment.hpp"

#include <algorithm>
#include <cmath>

#include "sas/errors.hpp"

namespace sas {

const char* to_string(ViolationKind v) {
    switch (v) {
        case ViolationKind::substation_cooldown: return "substation-cooldown";
        case ViolationKind::line_cooldown: return "line-cooldown";
        case ViolationKind::redundant_line_status: return "redundant-line-status";
        case ViolationKind::generator_limit: return "generator-limit";
        case ViolationKind::ramp_limit: return "ramp-limit";
        case ViolationKind::not_dispatchable: return "not-dispatchable";
        case ViolationKind::unknown_element: return "unknown-element";
    }
    return "?";
}

const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::none: return "none";
        case TerminationReason::islanding: return "islanding";
        case TerminationReason::unserved_load: return "unserved-load";
        case TerminationReason::end_of_scenario: return "end-of-scenario";
    }
    return "?";
}

Environment::Environment(GridSpec spec, Scenario scenario, uint64_t seed, EnvOptions options)
    : spec_(std::make_shared<const GridSpec>(std::move(spec))),
      scenario_(std::make_shared<const Scenario>(std::move(scenario))),
      options_(options),
      layout_(ObservationLayout::of(*spec_)),
      seed_(seed) {
    check_scenario(*spec_, *scenario_);

    load_peak_.resize(static_cast<size_t>(spec_->num_loads()));
    for (int d = 0; d < spec_->num_loads(); ++d)
        load_peak_[static_cast<size_t>(d)] = std::max(scenario_->peak_load(d), 1e-9);

    for (const auto& g : spec_->generators())
        if (!g.renewable && slack_gen_ < 0) slack_gen_ = g.id;
    if (slack_gen_ < 0) slack_gen_ = 0;  // all-renewable grid: first generator absorbs

    core_.topo = TopologyState::reference(*spec_);
    core_.dispatch.assign(static_cast<size_t>(spec_->num_generators()), 0.0);
    core_.output = core_.dispatch;
    core_.t = 0;

    // initial dispatch: renewables at available cap, thermal units sharing
    // the residual in proportion to their headroom
    double total_demand = 0.0;
    for (int d = 0; d < spec_->num_loads(); ++d) total_demand += demand(d, 0);
    double renewable_output = 0.0, thermal_min = 0.0, thermal_headroom = 0.0;
    for (const auto& g : spec_->generators()) {
        if (g.renewable) {
            renewable_output += effective_max(g.id, 0);
        } else {
            thermal_min += g.p_min;
            thermal_headroom += g.p_max - g.p_min;
        }
    }
    const double residual = total_demand - renewable_output;
    if (residual > thermal_min + thermal_headroom + options_.balance_tolerance)
        throw InfeasibleDispatch("step-0 demand exceeds dispatchable capacity");
    const double share =
        thermal_headroom > 0.0 ? std::clamp((residual - thermal_min) / thermal_headroom, 0.0, 1.0)
                               : 0.0;
    for (const auto& g : spec_->generators()) {
        core_.dispatch[static_cast<size_t>(g.id)] =
            g.renewable ? effective_max(g.id, 0) : g.p_min + share * (g.p_max - g.p_min);
    }

    StepInfo info;
    balance_and_solve(core_, info, 0);
    if (core_.done) throw InfeasibleDispatch("scenario infeasible at reset");
    rebuild_observation(core_, 0);
}

double Environment::demand(int load, int t) const {
    return scenario_->load_mw[static_cast<size_t>(load)][static_cast<size_t>(t)];
}

double Environment::renewable_cap(int gen, int t) const {
    const auto& series = scenario_->renew_cap_mw[static_cast<size_t>(gen)];
    return series.empty() ? 0.0 : series[static_cast<size_t>(t)];
}

double Environment::effective_max(int gen, int t) const {
    const auto& g = spec_->generator(gen);
    return g.renewable ? std::min(g.p_max, renewable_cap(gen, t)) : g.p_max;
}

double Environment::action_cost(const Action& action) const {
    switch (action.kind) {
        case ActionKind::do_nothing: return 0.0;
        case ActionKind::bus_reconfig:
        case ActionKind::set_line_status: return options_.reward.topology_cost;
        case ActionKind::redispatch: {
            const auto& g = spec_->generator(action.generator);
            const double p_max = std::max(g.p_max, 1e-9);
            return options_.reward.redispatch_cost * std::abs(action.delta_mw) / p_max;
        }
    }
    return 0.0;
}

Legality Environment::is_legal(const Action& action) const { return legality_of(core_, action); }

Legality Environment::legality_of(const Core& core, const Action& action) const {
    Legality out;
    auto flag = [&](ViolationKind v) {
        out.legal = false;
        out.violations.push_back(v);
    };
    switch (action.kind) {
        case ActionKind::do_nothing:
            break;
        case ActionKind::bus_reconfig: {
            if (action.substation < 0 || action.substation >= spec_->num_substations() ||
                action.target_bus.size() != spec_->substation_slots(action.substation).size()) {
                flag(ViolationKind::unknown_element);
                break;
            }
            if (core.topo.substation_cooldown[static_cast<size_t>(action.substation)] > 0)
                flag(ViolationKind::substation_cooldown);
            for (const auto b : action.target_bus)
                if (b != 1 && b != 2) {
                    flag(ViolationKind::unknown_element);
                    break;
                }
            break;
        }
        case ActionKind::set_line_status: {
            if (action.line < 0 || action.line >= spec_->num_lines()) {
                flag(ViolationKind::unknown_element);
                break;
            }
            if (core.topo.line_cooldown[static_cast<size_t>(action.line)] > 0)
                flag(ViolationKind::line_cooldown);
            const bool connected = core.topo.line_connected[static_cast<size_t>(action.line)] != 0;
            if (connected == action.connect) flag(ViolationKind::redundant_line_status);
            break;
        }
        case ActionKind::redispatch: {
            if (action.generator < 0 || action.generator >= spec_->num_generators()) {
                flag(ViolationKind::unknown_element);
                break;
            }
            const auto& g = spec_->generator(action.generator);
            if (g.renewable) {
                flag(ViolationKind::not_dispatchable);
                break;
            }
            const double tol = 1e-9;
            if (std::abs(action.delta_mw) > g.ramp_limit + tol) flag(ViolationKind::ramp_limit);
            const double target = core.dispatch[static_cast<size_t>(action.generator)] + action.delta_mw;
            if (target < g.p_min - tol || target > g.p_max + tol)
                flag(ViolationKind::generator_limit);
            break;
        }
    }
    return out;
}

void Environment::balance_and_solve(Core& core, StepInfo& info, int chronics_row) const {
    const int t = chronics_row;

    double total_demand = 0.0;
    for (int d = 0; d < spec_->num_loads(); ++d) total_demand += demand(d, t);

    double others = 0.0;
    for (const auto& g : spec_->generators()) {
        if (g.id == slack_gen_) continue;
        const double out = g.renewable
                               ? effective_max(g.id, t)
                               : std::clamp(core.dispatch[static_cast<size_t>(g.id)], g.p_min, g.p_max);
        core.output[static_cast<size_t>(g.id)] = out;
        others += out;
    }
    const auto& slack = spec_->generator(slack_gen_);
    const double residual = total_demand - others;
    const double slack_out = std::clamp(residual, slack.p_min, effective_max(slack_gen_, t));
    core.output[static_cast<size_t>(slack_gen_)] = slack_out;
    if (std::abs(residual - slack_out) >
        options_.balance_tolerance * std::max(1.0, total_demand)) {
        core.done = true;
        core.reason = TerminationReason::unserved_load;
    }

    // node injections in per-unit
    InjectionVector inj = InjectionVector::zeros(*spec_);
    for (const auto& g : spec_->generators()) {
        const int bus = core.topo.bus_of[static_cast<size_t>(spec_->gen_slot(g.id))];
        inj.p_node[static_cast<size_t>(spec_->node_id(g.substation, bus))] +=
            core.output[static_cast<size_t>(g.id)] / spec_->base_mva;
    }
    for (const auto& d : spec_->loads()) {
        const int bus = core.topo.bus_of[static_cast<size_t>(spec_->load_slot(d.id))];
        inj.p_node[static_cast<size_t>(spec_->node_id(d.substation, bus))] -=
            demand(d.id, t) / spec_->base_mva;
    }

    core.pf = solve_dc(*spec_, core.topo, inj);

    // overload bookkeeping with in-step cascading: every pass counts lines
    // above limit, trips those that exceeded it for kOverloadTripSteps
    // consecutive counts, then re-solves until no further trips
    while (true) {
        std::vector<int> tripped;
        for (const auto& l : spec_->lines()) {
            const auto li = static_cast<size_t>(l.id);
            if (!core.topo.line_connected[li]) continue;
            if (core.pf.rho[li] > 1.0) {
                if (++core.topo.overload_counter[li] >= kOverloadTripSteps) tripped.push_back(l.id);
            } else {
                core.topo.overload_counter[li] = 0;
            }
        }
        if (tripped.empty()) break;
        for (const int lid : tripped) {
            const auto li = static_cast<size_t>(lid);
            core.topo.line_connected[li] = 0;
            core.topo.bus_of[static_cast<size_t>(spec_->line_slot(lid, 0))] = 0;
            core.topo.bus_of[static_cast<size_t>(spec_->line_slot(lid, 1))] = 0;
            core.topo.overload_counter[li] = 0;
            core.topo.line_cooldown[li] = kLineRecoverySteps;
            info.tripped_lines.push_back(lid);
        }
        core.pf = solve_dc(*spec_, core.topo, inj);
    }

    core.risk = compute_risk(core.pf);
    info.risk = core.risk;
    info.overloaded_lines = 0;
    for (const double r : core.pf.rho)
        if (r > 1.0) ++info.overloaded_lines;

    if (!core.done) {
        // collapse conditions: an element stranded on a line-less bus, or an
        // island whose loads exceed what its generators can possibly supply
        for (const auto& island : electrical_islands(*spec_, core.topo)) {
            if (island.lines.empty() && (!island.generators.empty() || !island.loads.empty())) {
                core.done = true;
                core.reason = TerminationReason::islanding;
                break;
            }
            if (island.loads.empty()) continue;
            double island_demand = 0.0, island_capacity = 0.0;
            for (const int d : island.loads) island_demand += demand(d, t);
            for (const int g : island.generators) island_capacity += effective_max(g, t);
            if (island_demand > island_capacity + options_.balance_tolerance * std::max(1.0, island_demand)) {
                core.done = true;
                core.reason = TerminationReason::unserved_load;
                break;
            }
        }
    }
}

void Environment::rebuild_observation(Core& core, int chronics_row) const {
    const auto& lay = layout_;
    core.obs.assign(static_cast<size_t>(lay.dim()), 0.0);
    auto put = [&](int offset, int i, double v) { core.obs[static_cast<size_t>(offset + i)] = v; };

    for (int l = 0; l < spec_->num_lines(); ++l) {
        put(lay.rho_offset(), l, core.pf.rho[static_cast<size_t>(l)]);
        put(lay.connected_offset(), l, core.topo.line_connected[static_cast<size_t>(l)] ? 1.0 : 0.0);
        put(lay.line_cooldown_offset(), l,
            static_cast<double>(core.topo.line_cooldown[static_cast<size_t>(l)]) / kLineRecoverySteps);
    }
    for (int s = 0; s < spec_->num_substations(); ++s)
        put(lay.substation_cooldown_offset(), s,
            static_cast<double>(core.topo.substation_cooldown[static_cast<size_t>(s)]) /
                std::max(1, spec_->substation_cooldown_steps));
    for (const auto& g : spec_->generators())
        put(lay.gen_output_offset(), g.id,
            core.output[static_cast<size_t>(g.id)] / std::max(g.p_max, 1e-9));
    for (int d = 0; d < spec_->num_loads(); ++d)
        put(lay.load_demand_offset(), d,
            demand(d, chronics_row) / load_peak_[static_cast<size_t>(d)]);
    for (int s = 0; s < spec_->num_slots(); ++s)
        put(lay.bus_onehot_offset(), 3 * s + core.topo.bus_of[static_cast<size_t>(s)], 1.0);

    const double day_frac = static_cast<double>(core.t % kStepsPerDay) / kStepsPerDay;
    put(lay.time_offset(), 0, std::sin(2.0 * M_PI * day_frac));
    put(lay.time_offset(), 1, std::cos(2.0 * M_PI * day_frac));
    put(lay.time_offset(), 2, static_cast<double>(core.t) / (scenario_->length - 1));
}

StepOutcome Environment::transition(Core& core, const Action& action, bool forecast) const {
    StepOutcome outcome;

    const Legality legality = legality_of(core, action);
    const Action* applied = &action;
    static const Action kNothing = Action::nothing();
    if (!legality.legal) {
        applied = &kNothing;
        outcome.info.action_replaced = true;
    }

    // timers age before the action lands, so a cooldown of v set at step t
    // blocks steps t+1 .. t+v
    for (auto& c : core.topo.line_cooldown)
        if (c > 0) --c;
    for (auto& c : core.topo.substation_cooldown)
        if (c > 0) --c;

    core.topo = apply_topology_action(*spec_, core.topo, *applied);
    if (applied->kind == ActionKind::redispatch)
        core.dispatch[static_cast<size_t>(applied->generator)] += applied->delta_mw;

    const int next_t = core.t + 1;
    if (!forecast) {
        for (const auto& a : scenario_->attacks) {
            if (a.step != next_t) continue;
            const auto li = static_cast<size_t>(a.line);
            core.topo.line_connected[li] = 0;
            core.topo.bus_of[static_cast<size_t>(spec_->line_slot(a.line, 0))] = 0;
            core.topo.bus_of[static_cast<size_t>(spec_->line_slot(a.line, 1))] = 0;
            core.topo.overload_counter[li] = 0;
            // the outage spans the attack step plus duration-1 more
            core.topo.line_cooldown[li] = std::max(core.topo.line_cooldown[li], a.duration - 1);
        }
    }

    // the forecast persists the current row's demands and renewable caps
    const int chronics_row = forecast ? core.t : next_t;
    core.t = next_t;

    balance_and_solve(core, outcome.info, chronics_row);

    if (!core.done && next_t >= scenario_->length - 1) {
        core.done = true;
        core.reason = TerminationReason::end_of_scenario;
    }

    const bool collapsed = core.done && (core.reason == TerminationReason::islanding ||
                                         core.reason == TerminationReason::unserved_load);
    outcome.info.action_cost = outcome.info.action_replaced ? 0.0 : action_cost(*applied);
    outcome.reward = collapsed ? 0.0 : options_.reward.survival_bonus - outcome.info.action_cost;

    rebuild_observation(core, chronics_row);
    outcome.observation = core.obs;
    outcome.done = core.done;
    outcome.reason = core.reason;
    return outcome;
}

StepOutcome Environment::step(const Action& action) {
    if (core_.done) throw EpisodeFinished("episode is over");
    StepOutcome outcome = transition(core_, action, /*forecast=*/false);
    ++steps_taken_;
    sim_used_ = 0;
    return outcome;
}

SimOutcome Environment::simulate(const Action& action) {
    if (core_.done) throw EpisodeFinished("episode is over");
    if (options_.simulate_budget > 0 && sim_used_ >= options_.simulate_budget)
        throw SimulationBudgetExhausted("per-step simulation budget exhausted");
    ++sim_used_;

    const Legality legality = is_legal(action);
    Core copy = core_;
    const StepOutcome predicted = transition(copy, action, /*forecast=*/true);

    SimOutcome out;
    out.observation = predicted.observation;
    out.risk = predicted.info.risk;
    out.done = predicted.done;
    out.reason = predicted.reason;
    out.violations = legality.violations;
    const bool collapsed = predicted.done && (predicted.reason == TerminationReason::islanding ||
                                              predicted.reason == TerminationReason::unserved_load);
    out.legal = legality.legal && !collapsed;
    return out;
}

}  // namespace sas
