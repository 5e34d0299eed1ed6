#include "sas/grid.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sas/errors.hpp"

namespace sas {

GridSpec::GridSpec(std::vector<Substation> substations, std::vector<LineSpec> lines,
                   std::vector<GenSpec> generators, std::vector<LoadSpec> loads)
    : substations_(std::move(substations)),
      lines_(std::move(lines)),
      generators_(std::move(generators)),
      loads_(std::move(loads)) {
    validate();
    build_slots();
}

const LineSpec& GridSpec::line(int id) const {
    if (id < 0 || id >= num_lines()) throw UnknownElement("line " + std::to_string(id));
    return lines_[static_cast<size_t>(id)];
}

const GenSpec& GridSpec::generator(int id) const {
    if (id < 0 || id >= num_generators()) throw UnknownElement("generator " + std::to_string(id));
    return generators_[static_cast<size_t>(id)];
}

const LoadSpec& GridSpec::load(int id) const {
    if (id < 0 || id >= num_loads()) throw UnknownElement("load " + std::to_string(id));
    return loads_[static_cast<size_t>(id)];
}

int GridSpec::line_slot(int line, int end) const {
    if (line < 0 || line >= num_lines() || end < 0 || end > 1)
        throw UnknownElement("line slot " + std::to_string(line) + "/" + std::to_string(end));
    return line_slot_[static_cast<size_t>(2 * line + end)];
}

int GridSpec::gen_slot(int gen) const {
    if (gen < 0 || gen >= num_generators()) throw UnknownElement("generator " + std::to_string(gen));
    return gen_slot_[static_cast<size_t>(gen)];
}

int GridSpec::load_slot(int load) const {
    if (load < 0 || load >= num_loads()) throw UnknownElement("load " + std::to_string(load));
    return load_slot_[static_cast<size_t>(load)];
}

const std::vector<int>& GridSpec::substation_slots(int substation) const {
    if (substation < 0 || substation >= num_substations())
        throw UnknownElement("substation " + std::to_string(substation));
    return substation_slots_[static_cast<size_t>(substation)];
}

void GridSpec::build_slots() {
    slots_.clear();
    line_slot_.assign(static_cast<size_t>(2 * num_lines()), -1);
    gen_slot_.assign(static_cast<size_t>(num_generators()), -1);
    load_slot_.assign(static_cast<size_t>(num_loads()), -1);
    substation_slots_.assign(static_cast<size_t>(num_substations()), {});

    auto add = [&](SlotKind kind, int element, int end, int substation) {
        const int idx = static_cast<int>(slots_.size());
        slots_.push_back(Slot{kind, element, end, substation});
        substation_slots_[static_cast<size_t>(substation)].push_back(idx);
        return idx;
    };
    for (const auto& l : lines_) {
        line_slot_[static_cast<size_t>(2 * l.id)] = add(SlotKind::line_end, l.id, 0, l.from_substation);
        line_slot_[static_cast<size_t>(2 * l.id + 1)] = add(SlotKind::line_end, l.id, 1, l.to_substation);
    }
    for (const auto& g : generators_)
        gen_slot_[static_cast<size_t>(g.id)] = add(SlotKind::generator, g.id, 0, g.substation);
    for (const auto& d : loads_)
        load_slot_[static_cast<size_t>(d.id)] = add(SlotKind::load, d.id, 0, d.substation);
}

void GridSpec::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw Error("invalid grid: " + msg);
    };
    const int ns = num_substations();
    require(ns > 0, "no substations");
    for (int i = 0; i < ns; ++i)
        require(substations_[static_cast<size_t>(i)].id == i, "substation ids must be 0..n-1 in order");
    for (int i = 0; i < num_lines(); ++i) {
        const auto& l = lines_[static_cast<size_t>(i)];
        require(l.id == i, "line ids must be 0..n-1 in order");
        require(l.from_substation >= 0 && l.from_substation < ns, "line endpoint substation");
        require(l.to_substation >= 0 && l.to_substation < ns, "line endpoint substation");
        require(l.from_substation != l.to_substation, "line endpoints must differ");
        require(l.reactance > 0.0, "reactance must be positive");
        require(l.thermal_limit > 0.0, "thermal limit must be positive");
    }
    for (int i = 0; i < num_generators(); ++i) {
        const auto& g = generators_[static_cast<size_t>(i)];
        require(g.id == i, "generator ids must be 0..n-1 in order");
        require(g.substation >= 0 && g.substation < ns, "generator substation");
        require(g.p_min <= g.p_max, "generator p_min <= p_max");
        require(g.ramp_limit >= 0.0, "generator ramp limit");
    }
    for (int i = 0; i < num_loads(); ++i) {
        const auto& d = loads_[static_cast<size_t>(i)];
        require(d.id == i, "load ids must be 0..n-1 in order");
        require(d.substation >= 0 && d.substation < ns, "load substation");
    }

    // reference topology (everything on bus 1, all lines in) must be one component
    std::vector<int> parent(static_cast<size_t>(ns));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (const auto& l : lines_) parent[static_cast<size_t>(find(l.from_substation))] = find(l.to_substation);
    for (int i = 1; i < ns; ++i)
        require(find(i) == find(0), "grid is not connected in the reference topology");
}

TopologyState TopologyState::reference(const GridSpec& spec) {
    TopologyState t;
    t.bus_of.assign(static_cast<size_t>(spec.num_slots()), 1);
    t.line_connected.assign(static_cast<size_t>(spec.num_lines()), 1);
    t.overload_counter.assign(static_cast<size_t>(spec.num_lines()), 0);
    t.line_cooldown.assign(static_cast<size_t>(spec.num_lines()), 0);
    t.substation_cooldown.assign(static_cast<size_t>(spec.num_substations()), 0);
    return t;
}

void check_topology(const GridSpec& spec, const TopologyState& topo) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw Error("invalid topology: " + msg);
    };
    require(topo.bus_of.size() == static_cast<size_t>(spec.num_slots()), "bus_of size");
    require(topo.line_connected.size() == static_cast<size_t>(spec.num_lines()), "line_connected size");
    require(topo.overload_counter.size() == static_cast<size_t>(spec.num_lines()), "overload_counter size");
    require(topo.line_cooldown.size() == static_cast<size_t>(spec.num_lines()), "line_cooldown size");
    require(topo.substation_cooldown.size() == static_cast<size_t>(spec.num_substations()),
            "substation_cooldown size");

    for (int s = 0; s < spec.num_slots(); ++s) {
        const auto bus = topo.bus_of[static_cast<size_t>(s)];
        require(bus <= 2, "bus out of range");
        const auto& slot = spec.slot(s);
        if (slot.kind == SlotKind::line_end) {
            const bool connected = topo.line_connected[static_cast<size_t>(slot.element)] != 0;
            require((bus == 0) == !connected, "line endpoint bus 0 iff line disconnected");
        } else {
            require(bus == 1 || bus == 2, "generator/load must sit on bus 1 or 2");
        }
    }
    for (int l = 0; l < spec.num_lines(); ++l) {
        require(topo.overload_counter[static_cast<size_t>(l)] >= 0 &&
                    topo.overload_counter[static_cast<size_t>(l)] <= kOverloadTripSteps,
                "overload counter range");
        require(topo.line_cooldown[static_cast<size_t>(l)] >= 0, "line cooldown range");
    }
    for (int s = 0; s < spec.num_substations(); ++s)
        require(topo.substation_cooldown[static_cast<size_t>(s)] >= 0, "substation cooldown range");
}

std::vector<Island> electrical_islands(const GridSpec& spec, const TopologyState& topo) {
    const int n = spec.num_nodes();
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    auto unite = [&](int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); };

    for (const auto& l : spec.lines()) {
        if (!topo.line_connected[static_cast<size_t>(l.id)]) continue;
        const int bu = topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 0))];
        const int bv = topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 1))];
        unite(spec.node_id(l.from_substation, bu), spec.node_id(l.to_substation, bv));
    }

    // nodes worth reporting: carry an element or a connected line endpoint
    std::vector<char> active(static_cast<size_t>(n), 0);
    auto mark = [&](int sub, int bus) { active[static_cast<size_t>(spec.node_id(sub, bus))] = 1; };
    for (const auto& l : spec.lines()) {
        if (!topo.line_connected[static_cast<size_t>(l.id)]) continue;
        mark(l.from_substation, topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 0))]);
        mark(l.to_substation, topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 1))]);
    }
    for (const auto& g : spec.generators())
        mark(g.substation, topo.bus_of[static_cast<size_t>(spec.gen_slot(g.id))]);
    for (const auto& d : spec.loads())
        mark(d.substation, topo.bus_of[static_cast<size_t>(spec.load_slot(d.id))]);

    std::vector<int> island_of(static_cast<size_t>(n), -1);
    std::vector<Island> islands;
    for (int v = 0; v < n; ++v) {
        if (!active[static_cast<size_t>(v)]) continue;
        const int root = find(v);
        if (island_of[static_cast<size_t>(root)] < 0) {
            island_of[static_cast<size_t>(root)] = static_cast<int>(islands.size());
            islands.emplace_back();
        }
        islands[static_cast<size_t>(island_of[static_cast<size_t>(root)])].nodes.push_back(v);
    }
    auto island_at = [&](int node) -> Island& {
        return islands[static_cast<size_t>(island_of[static_cast<size_t>(find(node))])];
    };
    for (const auto& l : spec.lines()) {
        if (!topo.line_connected[static_cast<size_t>(l.id)]) continue;
        const int bu = topo.bus_of[static_cast<size_t>(spec.line_slot(l.id, 0))];
        island_at(spec.node_id(l.from_substation, bu)).lines.push_back(l.id);
    }
    for (const auto& g : spec.generators()) {
        const int bus = topo.bus_of[static_cast<size_t>(spec.gen_slot(g.id))];
        island_at(spec.node_id(g.substation, bus)).generators.push_back(g.id);
    }
    for (const auto& d : spec.loads()) {
        const int bus = topo.bus_of[static_cast<size_t>(spec.load_slot(d.id))];
        island_at(spec.node_id(d.substation, bus)).loads.push_back(d.id);
    }
    return islands;
}

// ---------------------------------------------------------------------------
// presets

GridSpec GridSpec::case5() {
    std::vector<Substation> subs{{0}, {1}, {2}, {3}, {4}};
    // ring 0-1-2-3-4-0 plus the 1-3 chord; limits leave ~35% headroom at
    // nominal load, so losing either generator's main export line overloads
    // the parallel export until generation is shifted across the ring
    std::vector<LineSpec> lines{
        {0, 0, 1, 0.20, 0.50},
        {1, 1, 2, 0.20, 0.50},
        {2, 2, 3, 0.20, 0.50},
        {3, 3, 4, 0.20, 0.35},
        {4, 4, 0, 0.20, 0.50},
        {5, 1, 3, 0.15, 0.35},
    };
    std::vector<GenSpec> gens{
        {0, 0, 0.0, 150.0, 40.0, false},
        {1, 2, 0.0, 150.0, 40.0, false},
    };
    std::vector<LoadSpec> loads{{0, 1}, {1, 3}, {2, 4}};
    return GridSpec(std::move(subs), std::move(lines), std::move(gens), std::move(loads));
}

GridSpec GridSpec::case14() {
    std::vector<Substation> subs;
    for (int i = 0; i < 14; ++i) subs.push_back({i});
    std::vector<LineSpec> lines{
        {0, 0, 1, 0.05917, 0.75},   {1, 0, 4, 0.22304, 0.60},
        {2, 1, 2, 0.19797, 0.20},   {3, 1, 3, 0.17632, 0.50},
        {4, 1, 4, 0.17388, 0.50},   {5, 2, 3, 0.17103, 0.30},
        {6, 3, 4, 0.04211, 0.40},   {7, 3, 6, 0.20912, 0.40},
        {8, 3, 8, 0.55618, 0.45},   {9, 4, 5, 0.25202, 0.75},
        {10, 5, 10, 0.19890, 0.50}, {11, 5, 11, 0.25581, 0.30},
        {12, 5, 12, 0.13027, 0.40}, {13, 6, 7, 0.17615, 0.70},
        {14, 6, 8, 0.11001, 0.90},  {15, 8, 9, 0.08450, 0.50},
        {16, 8, 13, 0.27038, 0.50}, {17, 9, 10, 0.19207, 0.40},
        {18, 11, 12, 0.19988, 0.30},{19, 12, 13, 0.34802, 0.35},
    };
    std::vector<GenSpec> gens{
        {0, 0, 0.0, 200.0, 40.0, false},
        {1, 1, 0.0, 120.0, 30.0, false},
        {2, 2, 0.0, 60.0, 0.0, true},
        {3, 5, 0.0, 60.0, 0.0, true},
        {4, 7, 0.0, 100.0, 25.0, false},
    };
    std::vector<LoadSpec> loads{
        {0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 8},
        {6, 9}, {7, 10}, {8, 11}, {9, 12}, {10, 13},
    };
    return GridSpec(std::move(subs), std::move(lines), std::move(gens), std::move(loads));
}

// ---------------------------------------------------------------------------
// grid definition file

namespace {

enum class Section { none, substations, lines, generators, loads };

Section parse_section(const std::string& name) {
    if (name == "[substations]") return Section::substations;
    if (name == "[lines]") return Section::lines;
    if (name == "[generators]") return Section::generators;
    if (name == "[loads]") return Section::loads;
    throw ParseError("unknown section " + name);
}

}  // namespace

GridSpec GridSpec::parse(const std::string& text) {
    std::vector<Substation> subs;
    std::vector<LineSpec> lines;
    std::vector<GenSpec> gens;
    std::vector<LoadSpec> loads;

    Section section = Section::none;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        std::string s = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::istringstream fields(s);
        std::string first;
        if (!(fields >> first)) continue;
        if (first.front() == '[') {
            section = parse_section(first);
            continue;
        }
        fields.clear();
        fields.str(s);
        try {
            switch (section) {
                case Section::substations: {
                    Substation t{};
                    fields >> t.id;
                    subs.push_back(t);
                    break;
                }
                case Section::lines: {
                    LineSpec t{};
                    fields >> t.id >> t.from_substation >> t.to_substation >> t.reactance >> t.thermal_limit;
                    if (fields.fail()) throw ParseError("bad line record");
                    lines.push_back(t);
                    break;
                }
                case Section::generators: {
                    GenSpec t{};
                    int renewable = 0;
                    fields >> t.id >> t.substation >> t.p_min >> t.p_max >> t.ramp_limit >> renewable;
                    if (fields.fail()) throw ParseError("bad generator record");
                    t.renewable = renewable != 0;
                    gens.push_back(t);
                    break;
                }
                case Section::loads: {
                    LoadSpec t{};
                    fields >> t.id >> t.substation;
                    if (fields.fail()) throw ParseError("bad load record");
                    loads.push_back(t);
                    break;
                }
                case Section::none:
                    throw ParseError("record before any section header");
            }
        } catch (const ParseError& e) {
            throw ParseError("grid file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return GridSpec(std::move(subs), std::move(lines), std::move(gens), std::move(loads));
}

GridSpec GridSpec::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string GridSpec::to_text() const {
    std::ostringstream out;
    out << "[substations]\n# id\n";
    for (const auto& s : substations_) out << s.id << "\n";
    out << "\n[lines]\n# id  from  to  reactance_pu  thermal_limit_pu\n";
    for (const auto& l : lines_)
        out << l.id << "  " << l.from_substation << "  " << l.to_substation << "  " << l.reactance
            << "  " << l.thermal_limit << "\n";
    out << "\n[generators]\n# id  substation  p_min_mw  p_max_mw  ramp_mw_per_step  renewable\n";
    for (const auto& g : generators_)
        out << g.id << "  " << g.substation << "  " << g.p_min << "  " << g.p_max << "  "
            << g.ramp_limit << "  " << (g.renewable ? 1 : 0) << "\n";
    out << "\n[loads]\n# id  substation\n";
    for (const auto& d : loads_) out << d.id << "  " << d.substation << "\n";
    return out.str();
}

}  // namespace sas
