#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sas/catalogue.hpp"
#include "sas/environment.hpp"
#include "sas/errors.hpp"

using namespace sas;
using namespace sas::testing;

TEST_CASE("catalogue basics") {
    const GridSpec spec = GridSpec::case5();
    const ActionCatalogue cat = build_catalogue(spec);

    CHECK(cat.at(0) == Action::nothing());
    CHECK_THROWS_AS(cat.at(-1), OutOfRange);
    CHECK_THROWS_AS(cat.at(cat.size()), OutOfRange);
    CHECK_THROWS_AS(cat.index_of(Action::redispatch(0, 1.0)), NotInCatalogue);
}

TEST_CASE("per-substation bus configurations match the enumeration oracle") {
    const GridSpec spec = GridSpec::case5();
    const ActionCatalogue cat = build_catalogue(spec);

    for (int s = 0; s < spec.num_substations(); ++s) {
        int got = 0;
        for (const auto& a : cat.actions())
            if (a.kind == ActionKind::bus_reconfig && a.substation == s) ++got;
        const int slots = static_cast<int>(spec.substation_slots(s).size());
        CHECK(got == oracle_unique_bus_configs(slots));
    }

    // a 3-slot substation yields 3 configurations after symmetry and
    // identity removal
    CHECK(oracle_unique_bus_configs(3) == 3);
    REQUIRE(spec.substation_slots(0).size() == 3);
    int sub0 = 0;
    for (const auto& a : cat.actions())
        if (a.kind == ActionKind::bus_reconfig && a.substation == 0) ++sub0;
    CHECK(sub0 == 3);
}

TEST_CASE("case5 catalogue sizes are frozen") {
    const GridSpec spec = GridSpec::case5();
    // slots per substation: 3, 4, 3, 4, 3 -> bus configs 3+7+3+7+3 = 23;
    // plus do-nothing and 12 line toggles
    CHECK(build_catalogue(spec).size() == 36);

    CatalogueOptions with_redispatch;
    with_redispatch.include_redispatch = true;
    // 2 dispatchable generators x 4 levels
    CHECK(build_catalogue(spec, with_redispatch).size() == 44);

    CatalogueOptions no_toggles;
    no_toggles.include_line_toggles = false;
    CHECK(build_catalogue(spec, no_toggles).size() == 24);
}

TEST_CASE("catalogue has no duplicates and is deterministic") {
    const GridSpec spec = GridSpec::case14();
    CatalogueOptions options;
    options.include_redispatch = true;
    const ActionCatalogue a = build_catalogue(spec, options);
    const ActionCatalogue b = build_catalogue(spec, options);

    CHECK(a.actions() == b.actions());
    for (int i = 0; i < a.size(); ++i)
        for (int j = i + 1; j < a.size(); ++j) CHECK(!(a.at(i) == a.at(j)));
}

TEST_CASE("index_of inverts action_at and resolves the bus symmetry") {
    const GridSpec spec = GridSpec::case5();
    CatalogueOptions options;
    options.include_redispatch = true;
    const ActionCatalogue cat = build_catalogue(spec, options);

    for (int i = 0; i < cat.size(); ++i) CHECK(cat.index_of(cat.at(i)) == i);

    // the same configuration written with buses swapped resolves to the
    // canonical entry
    for (int i = 0; i < cat.size(); ++i) {
        const Action& a = cat.at(i);
        if (a.kind != ActionKind::bus_reconfig) continue;
        Action swapped = a;
        for (auto& b : swapped.target_bus) b = (b == 1) ? 2 : 1;
        CHECK(cat.index_of(swapped) == i);
    }
}

TEST_CASE("redispatch flag controls redispatch entries") {
    const GridSpec spec = GridSpec::case14();
    for (const auto& a : build_catalogue(spec).actions())
        CHECK(a.kind != ActionKind::redispatch);

    CatalogueOptions options;
    options.include_redispatch = true;
    int redispatch = 0;
    for (const auto& a : build_catalogue(spec, options).actions()) {
        if (a.kind != ActionKind::redispatch) continue;
        ++redispatch;
        CHECK_FALSE(spec.generator(a.generator).renewable);
    }
    // case14 has 3 dispatchable generators
    CHECK(redispatch == 3 * 4);
}

TEST_CASE("every catalogued action is legal from reset except redundant toggles") {
    const GridSpec spec = GridSpec::case5();
    CatalogueOptions options;
    options.include_redispatch = true;
    const ActionCatalogue cat = build_catalogue(spec, options);

    Environment env(spec, flat_scenario(spec, 10, 90.0), 0);
    for (int i = 0; i < cat.size(); ++i) {
        const Legality legality = env.is_legal(cat.at(i));
        if (cat.at(i).kind == ActionKind::set_line_status && cat.at(i).connect) {
            // reconnecting an already-connected line: benign but filtered
            CHECK_FALSE(legality.legal);
            REQUIRE(legality.violations.size() == 1);
            CHECK(legality.violations[0] == ViolationKind::redundant_line_status);
        } else {
            CHECK(legality.legal);
        }
    }
}

TEST_CASE("catalogue dump lists every action") {
    const GridSpec spec = GridSpec::case5();
    const ActionCatalogue cat = build_catalogue(spec);
    const std::string table = dump_catalogue(spec, cat);
    CHECK(std::count(table.begin(), table.end(), '\n') == cat.size() + 1);  // header + rows
    CHECK(table.find("do-nothing") != std::string::npos);
    CHECK(table.find("line-disconnect") != std::string::npos);
}
