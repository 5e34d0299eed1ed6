#include "sas/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sas/errors.hpp"
#include "sas/rng.hpp"

namespace sas {

double Scenario::peak_load(int load) const {
    const auto& series = load_mw[static_cast<size_t>(load)];
    double peak = 0.0;
    for (const double v : series) peak = std::max(peak, v);
    return peak;
}

void check_scenario(const GridSpec& spec, const Scenario& scenario) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw Error("invalid scenario: " + msg);
    };
    require(scenario.length >= 2, "length must be at least 2");
    require(scenario.load_mw.size() == static_cast<size_t>(spec.num_loads()), "load series count");
    for (const auto& series : scenario.load_mw) {
        require(series.size() == static_cast<size_t>(scenario.length), "load series length");
        for (const double v : series) require(v >= 0.0, "negative demand");
    }
    require(scenario.renew_cap_mw.size() == static_cast<size_t>(spec.num_generators()),
            "renewable series count");
    for (const auto& g : spec.generators()) {
        const auto& series = scenario.renew_cap_mw[static_cast<size_t>(g.id)];
        if (g.renewable) {
            require(series.size() == static_cast<size_t>(scenario.length), "renewable series length");
            for (const double v : series) require(v >= 0.0, "negative renewable cap");
        } else {
            require(series.empty(), "non-renewable generator has a cap series");
        }
    }
    for (const auto& a : scenario.attacks) {
        require(a.step >= 0 && a.step < scenario.length, "attack step out of range");
        require(a.line >= 0 && a.line < spec.num_lines(), "attack line out of range");
        require(a.duration >= 1, "attack duration");
    }
}

namespace {

std::string index_name(const char* prefix, int index) {
    std::ostringstream out;
    out << prefix << std::setw(3) << std::setfill('0') << index << ".csv";
    return out.str();
}

}  // namespace

void save_scenario(const GridSpec& spec, const Scenario& scenario,
                   const std::filesystem::path& dir, int index) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / index_name("chronics_", index));
        if (!out) throw IoError("cannot write chronics file in " + dir.string());
        out << std::setprecision(17);
        out << "step";
        for (const auto& d : spec.loads()) out << ",load_" << d.id;
        for (const auto& g : spec.generators())
            if (g.renewable) out << ",renew_cap_" << g.id;
        out << "\n";
        for (int t = 0; t < scenario.length; ++t) {
            out << t;
            for (const auto& d : spec.loads())
                out << "," << scenario.load_mw[static_cast<size_t>(d.id)][static_cast<size_t>(t)];
            for (const auto& g : spec.generators())
                if (g.renewable)
                    out << "," << scenario.renew_cap_mw[static_cast<size_t>(g.id)][static_cast<size_t>(t)];
            out << "\n";
        }
    }
    {
        std::ofstream out(dir / index_name("attacks_", index));
        if (!out) throw IoError("cannot write attacks file in " + dir.string());
        out << "step,line_id,duration\n";
        for (const auto& a : scenario.attacks)
            out << a.step << "," << a.line << "," << a.duration << "\n";
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

Scenario load_scenario(const GridSpec& spec, const std::filesystem::path& dir, int index) {
    Scenario scenario;
    scenario.name = "scenario_" + std::to_string(index);
    scenario.load_mw.assign(static_cast<size_t>(spec.num_loads()), {});
    scenario.renew_cap_mw.assign(static_cast<size_t>(spec.num_generators()), {});

    const auto chronics_path = dir / index_name("chronics_", index);
    std::ifstream in(chronics_path);
    if (!in) throw IoError("cannot open " + chronics_path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty chronics file");
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "step") throw ParseError("chronics header must start with 'step'");

    // column -> destination series
    std::vector<std::vector<double>*> columns;
    for (size_t c = 1; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name.rfind("load_", 0) == 0) {
            const int id = std::stoi(name.substr(5));
            if (id < 0 || id >= spec.num_loads()) throw ParseError("unknown column " + name);
            columns.push_back(&scenario.load_mw[static_cast<size_t>(id)]);
        } else if (name.rfind("renew_cap_", 0) == 0) {
            const int id = std::stoi(name.substr(10));
            if (id < 0 || id >= spec.num_generators() || !spec.generator(id).renewable)
                throw ParseError("unknown column " + name);
            columns.push_back(&scenario.renew_cap_mw[static_cast<size_t>(id)]);
        } else {
            throw ParseError("unknown column " + name);
        }
    }

    int expected_step = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) throw ParseError("chronics row width mismatch");
        try {
            if (std::stoi(fields[0]) != expected_step)
                throw ParseError("chronics steps must be consecutive");
            for (size_t c = 1; c < fields.size(); ++c)
                columns[c - 1]->push_back(std::stod(fields[c]));
        } catch (const std::invalid_argument&) {
            throw ParseError("bad chronics value in row " + std::to_string(expected_step));
        }
        ++expected_step;
    }
    scenario.length = expected_step;

    const auto attacks_path = dir / index_name("attacks_", index);
    std::ifstream att(attacks_path);
    if (!att) throw IoError("cannot open " + attacks_path.string());
    if (std::getline(att, line) && line.rfind("step", 0) != 0)
        throw ParseError("attacks header must start with 'step'");
    while (std::getline(att, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3) throw ParseError("attack row needs 3 fields");
        try {
            scenario.attacks.push_back(
                Attack{std::stoi(fields[0]), std::stoi(fields[1]), std::stoi(fields[2])});
        } catch (const std::invalid_argument&) {
            throw ParseError("bad attack row: " + line);
        }
    }

    check_scenario(spec, scenario);
    return scenario;
}

int count_scenarios(const std::filesystem::path& dir) {
    int count = 0;
    while (std::filesystem::exists(dir / index_name("chronics_", count))) ++count;
    return count;
}

std::vector<Scenario> load_scenario_dir(const GridSpec& spec, const std::filesystem::path& dir) {
    const int n = count_scenarios(dir);
    if (n == 0) throw IoError("no scenarios found in " + dir.string());
    std::vector<Scenario> scenarios;
    scenarios.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) scenarios.push_back(load_scenario(spec, dir, i));
    return scenarios;
}

std::vector<Scenario> generate_scenarios(const GridSpec& spec, const ScenarioGenOptions& options,
                                         uint64_t seed) {
    if (options.count < 1 || options.length < 2) throw Error("bad scenario generation options");

    double total_capacity = 0.0;
    for (const auto& g : spec.generators()) total_capacity += g.p_max;

    // fixed per-load share of the total demand: explicit, or drawn once per seed
    std::vector<double> share(static_cast<size_t>(spec.num_loads()));
    if (!options.load_shares.empty()) {
        if (options.load_shares.size() != share.size())
            throw Error("load_shares must have one entry per load");
        share = options.load_shares;
        double sum = 0.0;
        for (const double w : share) sum += w;
        for (auto& w : share) w /= sum;
    } else {
        rng::Stream s(rng::derive(seed, 0x10ad));
        double sum = 0.0;
        for (auto& w : share) {
            w = 0.5 + s.uniform01();
            sum += w;
        }
        for (auto& w : share) w /= sum;
    }

    std::vector<Scenario> scenarios;
    for (int k = 0; k < options.count; ++k) {
        rng::Stream s(rng::derive(seed, 0x5ce0, static_cast<uint64_t>(k)));
        Scenario scenario;
        scenario.name = "scenario_" + std::to_string(k);
        scenario.length = options.length;
        scenario.load_mw.assign(static_cast<size_t>(spec.num_loads()), {});
        scenario.renew_cap_mw.assign(static_cast<size_t>(spec.num_generators()), {});

        const double mean_total = options.utilization * total_capacity;
        const double phase = s.uniform01();
        for (int d = 0; d < spec.num_loads(); ++d) {
            auto& series = scenario.load_mw[static_cast<size_t>(d)];
            series.reserve(static_cast<size_t>(options.length));
            const double base = mean_total * share[static_cast<size_t>(d)];
            for (int t = 0; t < options.length; ++t) {
                const double day_angle =
                    2.0 * M_PI * (static_cast<double>(t) / kStepsPerDay + phase);
                const double sinusoid = 1.0 + options.daily_swing * std::sin(day_angle);
                const double jitter = 1.0 + options.noise * (2.0 * s.uniform01() - 1.0);
                series.push_back(base * sinusoid * jitter);
            }
        }

        for (const auto& g : spec.generators()) {
            if (!g.renewable) continue;
            auto& series = scenario.renew_cap_mw[static_cast<size_t>(g.id)];
            series.reserve(static_cast<size_t>(options.length));
            double cap = 0.5 * g.p_max;
            for (int t = 0; t < options.length; ++t) {
                cap = std::clamp(cap + options.renew_walk * g.p_max * (2.0 * s.uniform01() - 1.0),
                                 0.0, g.p_max);
                series.push_back(cap);
            }
        }

        if (options.attack_rate > 0.0 || options.min_attacks > 0) {
            const double days = static_cast<double>(options.length) / kStepsPerDay;
            const int n_attacks =
                std::max(options.min_attacks, s.poisson(options.attack_rate * days));
            for (int a = 0; a < n_attacks; ++a) {
                Attack attack;
                // keep a margin at both ends so the outage plays out in-episode
                const int lo = std::min(10, options.length / 10);
                const int hi = std::max(lo + 1, options.length - options.attack_duration_max - 4);
                attack.step = lo + static_cast<int>(s.below(static_cast<uint64_t>(hi - lo)));
                if (options.attack_lines.empty()) {
                    attack.line = static_cast<int>(s.below(static_cast<uint64_t>(spec.num_lines())));
                } else {
                    attack.line = options.attack_lines[s.below(options.attack_lines.size())];
                }
                attack.duration =
                    options.attack_duration_min +
                    static_cast<int>(s.below(static_cast<uint64_t>(
                        options.attack_duration_max - options.attack_duration_min + 1)));
                scenario.attacks.push_back(attack);
            }
            std::sort(scenario.attacks.begin(), scenario.attacks.end(),
                      [](const Attack& a, const Attack& b) {
                          return a.step != b.step ? a.step < b.step : a.line < b.line;
                      });
            // one outage at a time: drop attacks that land before the grid
            // has had a chance to recover from the previous one
            std::vector<Attack> spaced;
            int clear_at = 0;
            for (const auto& a : scenario.attacks) {
                if (a.step < clear_at) continue;
                spaced.push_back(a);
                clear_at = a.step + a.duration + kLineRecoverySteps;
            }
            scenario.attacks = std::move(spaced);
        }

        check_scenario(spec, scenario);
        scenarios.push_back(std::move(scenario));
    }
    return scenarios;
}

}  // namespace sas
