#ifndef SAS_CATALOGUE_HPP
#define SAS_CATALOGUE_HPP

#include <string>
#include <vector>

#include "sas/action.hpp"
#include "sas/grid.hpp"

namespace sas {

struct CatalogueOptions {
    bool include_line_toggles = true;
    bool include_redispatch = false;
    // per dispatchable generator, fractions of its ramp limit
    std::vector<double> redispatch_fractions = {-0.4, -0.2, 0.2, 0.4};
};

// The fixed, ordered action list the policy scores. Index 0 is always
// do-nothing; bus configurations are canonical (first slot pinned to bus 1)
// and the all-bus-1 identity is excluded.
class ActionCatalogue {
public:
    ActionCatalogue() = default;
    explicit ActionCatalogue(std::vector<Action> actions) : actions_(std::move(actions)) {}

    int size() const { return static_cast<int>(actions_.size()); }
    const Action& at(int index) const;           // throws OutOfRange
    int index_of(const Action& action) const;    // throws NotInCatalogue
    const std::vector<Action>& actions() const { return actions_; }

private:
    std::vector<Action> actions_;
};

ActionCatalogue build_catalogue(const GridSpec& spec, const CatalogueOptions& options = {});

// Rewrites a bus reconfiguration into canonical form: if the substation's
// first slot targets bus 2, both buses are relabeled. Other kinds pass
// through unchanged. index_of() resolves actions modulo this symmetry.
Action canonicalize(Action action);

// Human-readable table (index, kind, target, description) for audit.
std::string dump_catalogue(const GridSpec& spec, const ActionCatalogue& catalogue);

}  // namespace sas

#endif
