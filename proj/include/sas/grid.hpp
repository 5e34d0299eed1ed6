#ifndef SAS_GRID_HPP
#define SAS_GRID_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sas {

// Consecutive overloaded steps after which a line trips automatically.
inline constexpr int kOverloadTripSteps = 3;
// Steps a tripped line stays unavailable before it may be reconnected.
inline constexpr int kLineRecoverySteps = 12;
// Steps per simulated day (5-minute resolution).
inline constexpr int kStepsPerDay = 288;

struct Substation {
    int id = 0;
};

struct LineSpec {
    int id = 0;
    int from_substation = 0;
    int to_substation = 0;
    double reactance = 0.0;      // per-unit, > 0
    double thermal_limit = 0.0;  // per-unit flow, > 0
};

struct GenSpec {
    int id = 0;
    int substation = 0;
    double p_min = 0.0;  // MW
    double p_max = 0.0;  // MW
    double ramp_limit = 0.0;  // MW per step
    bool renewable = false;
};

struct LoadSpec {
    int id = 0;
    int substation = 0;
};

enum class SlotKind : uint8_t { line_end, generator, load };

// One attachment point of an element at a substation. Lines own two
// slots (end 0 and end 1), generators and loads one each.
struct Slot {
    SlotKind kind;
    int element;  // line/generator/load id
    int end;      // 0 or 1 for line ends, 0 otherwise
    int substation;
};

class GridSpec {
public:
    GridSpec(std::vector<Substation> substations, std::vector<LineSpec> lines,
             std::vector<GenSpec> generators, std::vector<LoadSpec> loads);

    int num_substations() const { return static_cast<int>(substations_.size()); }
    int num_lines() const { return static_cast<int>(lines_.size()); }
    int num_generators() const { return static_cast<int>(generators_.size()); }
    int num_loads() const { return static_cast<int>(loads_.size()); }

    const std::vector<Substation>& substations() const { return substations_; }
    const std::vector<LineSpec>& lines() const { return lines_; }
    const std::vector<GenSpec>& generators() const { return generators_; }
    const std::vector<LoadSpec>& loads() const { return loads_; }

    const LineSpec& line(int id) const;
    const GenSpec& generator(int id) const;
    const LoadSpec& load(int id) const;

    // flat element-endpoint slot table
    int num_slots() const { return static_cast<int>(slots_.size()); }
    const Slot& slot(int i) const { return slots_[static_cast<size_t>(i)]; }
    int line_slot(int line, int end) const;
    int gen_slot(int gen) const;
    int load_slot(int load) const;
    // slots attached to one substation, in global slot order
    const std::vector<int>& substation_slots(int substation) const;

    // electrical nodes: one per (substation, bus) pair
    int num_nodes() const { return 2 * num_substations(); }
    int node_id(int substation, int bus) const { return 2 * substation + (bus - 1); }
    int node_substation(int node) const { return node / 2; }
    int node_bus(int node) const { return node % 2 + 1; }

    // steps a substation stays locked after a bus reconfiguration
    int substation_cooldown_steps = 3;
    // steps a line stays locked after a manual status change
    int line_action_cooldown_steps = 3;
    // MW per unit of per-unit injection
    double base_mva = 100.0;

    static GridSpec case5();
    static GridSpec case14();
    static GridSpec from_file(const std::filesystem::path& path);
    static GridSpec parse(const std::string& text);
    std::string to_text() const;

private:
    void build_slots();
    void validate() const;

    std::vector<Substation> substations_;
    std::vector<LineSpec> lines_;
    std::vector<GenSpec> generators_;
    std::vector<LoadSpec> loads_;

    std::vector<Slot> slots_;
    std::vector<int> line_slot_;  // 2 per line
    std::vector<int> gen_slot_;
    std::vector<int> load_slot_;
    std::vector<std::vector<int>> substation_slots_;
};

// Mutable part of the grid: bus assignments, line statuses, timers.
// Value type; operations return fresh states.
struct TopologyState {
    std::vector<uint8_t> bus_of;          // per slot: 0 (off), 1 or 2
    std::vector<uint8_t> line_connected;  // per line
    std::vector<int> overload_counter;    // per line, consecutive overloaded steps
    std::vector<int> line_cooldown;       // per line, steps until reconnection allowed
    std::vector<int> substation_cooldown;

    bool operator==(const TopologyState&) const = default;

    // all elements on bus 1, all lines connected, timers zero
    static TopologyState reference(const GridSpec& spec);
};

// Throws Error if `topo` breaks a structural invariant for `spec`.
void check_topology(const GridSpec& spec, const TopologyState& topo);

struct Island {
    std::vector<int> nodes;  // (substation, bus) node ids
    std::vector<int> lines;
    std::vector<int> generators;
    std::vector<int> loads;
};

// Connected components of the live grid graph. Nodes are (substation, bus)
// pairs joined by connected lines; generators and loads are grouped by the
// node they sit on. Nodes with no elements and no lines are skipped, and
// disconnected lines belong to no island.
std::vector<Island> electrical_islands(const GridSpec& spec, const TopologyState& topo);

}  // namespace sas

#endif
