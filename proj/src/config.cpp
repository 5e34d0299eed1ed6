#include "sas/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sas/errors.hpp"

namespace sas {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ParseError("bad boolean value '" + v + "'");
}

std::array<int, 3> parse_hidden(const std::string& v) {
    std::array<int, 3> hidden{};
    std::istringstream in(v);
    std::string field;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(in, field, ',')) throw ParseError("hidden needs 3 comma-separated widths");
        hidden[static_cast<size_t>(i)] = std::stoi(trim(field));
    }
    return hidden;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "grid") cfg.grid = value;
            else if (key == "scenarios") cfg.scenario_dir = value;
            else if (key == "out") cfg.out_dir = value;
            else if (key == "workers") cfg.workers = std::stoi(value);
            else if (key == "process_workers") cfg.process_workers = parse_bool(value);
            else if (key == "hidden") cfg.hidden = parse_hidden(value);
            else if (key == "redispatch") cfg.include_redispatch = parse_bool(value);
            else if (key == "simulate_budget") cfg.simulate_budget = std::stoi(value);
            else if (key == "checkpoint_interval") cfg.checkpoint_interval = std::stoi(value);
            else if (key == "population") cfg.train.population = std::stoi(value);
            else if (key == "sigma") cfg.train.sigma = std::stod(value);
            else if (key == "alpha") cfg.train.alpha = std::stod(value);
            else if (key == "k") cfg.train.k = std::stoi(value);
            else if (key == "episodes") cfg.train.episodes_per_perturbation = std::stoi(value);
            else if (key == "iterations") cfg.train.iterations = std::stoi(value);
            else if (key == "gamma") cfg.train.gamma = std::stod(value);
            else if (key == "antithetic") cfg.train.antithetic = parse_bool(value);
            else if (key == "rank_shaping") cfg.train.rank_shaping = parse_bool(value);
            else if (key == "quorum") cfg.train.quorum = std::stod(value);
            else if (key == "seed") cfg.train.seed = std::stoull(value);
            else if (key == "max_steps") cfg.train.max_steps = std::stoi(value);
            else throw ParseError("unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string to_text(const RunConfig& cfg) {
    std::ostringstream out;
    out << "grid = " << cfg.grid << "\n";
    out << "scenarios = " << cfg.scenario_dir << "\n";
    out << "out = " << cfg.out_dir << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "process_workers = " << (cfg.process_workers ? 1 : 0) << "\n";
    out << "hidden = " << cfg.hidden[0] << "," << cfg.hidden[1] << "," << cfg.hidden[2] << "\n";
    out << "redispatch = " << (cfg.include_redispatch ? 1 : 0) << "\n";
    out << "simulate_budget = " << cfg.simulate_budget << "\n";
    out << "checkpoint_interval = " << cfg.checkpoint_interval << "\n";
    out << "population = " << cfg.train.population << "\n";
    out << "sigma = " << cfg.train.sigma << "\n";
    out << "alpha = " << cfg.train.alpha << "\n";
    out << "k = " << cfg.train.k << "\n";
    out << "episodes = " << cfg.train.episodes_per_perturbation << "\n";
    out << "iterations = " << cfg.train.iterations << "\n";
    out << "gamma = " << cfg.train.gamma << "\n";
    out << "antithetic = " << (cfg.train.antithetic ? 1 : 0) << "\n";
    out << "rank_shaping = " << (cfg.train.rank_shaping ? 1 : 0) << "\n";
    out << "quorum = " << cfg.train.quorum << "\n";
    out << "seed = " << cfg.train.seed << "\n";
    out << "max_steps = " << cfg.train.max_steps << "\n";
    return out.str();
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config " + path.string());
    out << to_text(cfg);
}

void apply_env_overrides(RunConfig& cfg) {
    if (const char* v = std::getenv("GRIDSAS_OUT_DIR")) cfg.out_dir = v;
    if (const char* v = std::getenv("GRIDSAS_WORKERS")) cfg.workers = std::stoi(v);
}

GridSpec resolve_grid(const std::string& name) {
    if (name == "case5") return GridSpec::case5();
    if (name == "case14") return GridSpec::case14();
    return GridSpec::from_file(name);
}

}  // namespace sas
