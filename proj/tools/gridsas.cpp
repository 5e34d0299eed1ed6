// gridsas: operator entry points for the grid management artifact.
// Subcommands: gen-scenarios, train, evaluate, ablate-k, replay,
// dump-catalogue, and the internal `worker` loop used by --process-workers.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "sas/config.hpp"
#include "sas/errors.hpp"
#include "sas/es.hpp"
#include "sas/logio.hpp"
#include "sas/workers.hpp"

namespace fs = std::filesystem;
using namespace sas;

namespace {

std::string checkpoint_name(int iteration) {
    std::ostringstream out;
    out << "checkpoint_" << std::setw(6) << std::setfill('0') << iteration << ".bin";
    return out.str();
}

std::unique_ptr<GridRolloutBackend> make_backend(const RunConfig& cfg) {
    GridSpec spec = resolve_grid(cfg.grid);
    std::vector<Scenario> scenarios = load_scenario_dir(spec, cfg.scenario_dir);
    CatalogueOptions cat_options;
    cat_options.include_redispatch = cfg.include_redispatch;
    EnvOptions env_options;
    env_options.simulate_budget = cfg.simulate_budget;
    return std::make_unique<GridRolloutBackend>(std::move(spec), std::move(scenarios), cat_options,
                                                env_options, cfg.train.gamma,
                                                cfg.train.episodes_per_perturbation);
}

PolicyShape policy_shape_for(const RunConfig& cfg, const GridSpec& spec,
                             const ActionCatalogue& catalogue) {
    PolicyShape shape;
    shape.input = Environment::observation_dim(spec);
    shape.hidden = cfg.hidden;
    shape.output = catalogue.size();
    return shape;
}

std::unique_ptr<WorkerPool> make_pool(const RunConfig& cfg, const fs::path& config_path) {
    if (cfg.process_workers) {
        std::vector<std::string> cmd{fs::read_symlink("/proc/self/exe").string(), "worker",
                                     "--config", config_path.string()};
        return std::make_unique<ProcessWorkerPool>(cmd, cfg.workers, cfg.train.quorum);
    }
    return std::make_unique<InprocWorkerPool>(
        cfg.workers, [cfg] { return make_backend(cfg); }, cfg.train.quorum);
}

int cmd_gen_scenarios(const std::string& grid, const std::string& out_dir,
                      const ScenarioGenOptions& options, uint64_t seed) {
    const GridSpec spec = resolve_grid(grid);
    const std::vector<Scenario> scenarios = generate_scenarios(spec, options, seed);
    for (size_t i = 0; i < scenarios.size(); ++i)
        save_scenario(spec, scenarios[i], out_dir, static_cast<int>(i));
    std::cout << "wrote " << scenarios.size() << " scenarios of length " << options.length
              << " to " << out_dir << "\n";
    return 0;
}

int cmd_train(RunConfig cfg, bool resume) {
    check_config(cfg.train);
    cfg.checkpoint_interval = std::max(1, cfg.checkpoint_interval);
    const GridSpec spec = resolve_grid(cfg.grid);
    CatalogueOptions cat_options;
    cat_options.include_redispatch = cfg.include_redispatch;
    const ActionCatalogue catalogue = build_catalogue(spec, cat_options);
    const PolicyShape shape = policy_shape_for(cfg, spec, catalogue);
    const int num_scenarios = count_scenarios(cfg.scenario_dir);
    if (num_scenarios == 0) throw IoError("no scenarios in " + cfg.scenario_dir);

    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    const fs::path config_path = out / "run.config";
    save_run_config(config_path, cfg);

    PolicyParams params = init_policy(shape, cfg.train.seed);
    int start_iteration = 0;
    if (resume) {
        std::ifstream state(out / "trainer_state.txt");
        std::string checkpoint;
        if (!(state >> start_iteration >> checkpoint))
            throw IoError("no resumable state in " + cfg.out_dir);
        params = load_checkpoint(out / checkpoint, shape);
        std::cout << "resuming at iteration " << start_iteration << "\n";
    }

    auto pool = make_pool(cfg, config_path);
    Trainer trainer(std::move(params), cfg.train, *pool, num_scenarios);
    trainer.set_iteration(start_iteration);

    MetricsWriter metrics(out / "metrics.csv");
    auto save_state = [&](int iteration) {
        const std::string name = checkpoint_name(iteration);
        save_checkpoint(out / name, trainer.params());
        std::ofstream state(out / "trainer_state.txt", std::ios::trunc);
        state << iteration << " " << name << "\n";
    };

    for (int i = start_iteration; i < cfg.train.iterations; ++i) {
        const IterationStats stats = trainer.run_iteration();
        metrics.append({stats.iteration, stats.mean_return, stats.std_return, stats.max_return,
                        stats.grad_norm, stats.wall_ms});
        std::cout << "iter " << stats.iteration << "  mean " << stats.mean_return << "  max "
                  << stats.max_return << "  |g| " << stats.grad_norm << "\n";
        if ((i + 1) % cfg.checkpoint_interval == 0 || i + 1 == cfg.train.iterations)
            save_state(i + 1);
    }
    save_checkpoint(out / "checkpoint.bin", trainer.params());

    // quick greedy summary over the training scenarios
    const std::vector<Scenario> scenarios = load_scenario_dir(spec, cfg.scenario_dir);
    EpisodeOptions eval_options;
    eval_options.k = cfg.train.k;
    eval_options.gamma = cfg.train.gamma;
    eval_options.max_steps = cfg.train.max_steps;
    EnvOptions env_options;
    env_options.simulate_budget = cfg.simulate_budget;
    const EvalReport report =
        evaluate_policy(spec, scenarios, catalogue, trainer.params(), eval_options, env_options);
    std::cout << "final greedy eval: mean return " << report.mean_return << ", mean steps "
              << report.mean_steps << ", fallback rate " << report.fallback_rate << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint, bool do_nothing) {
    if (checkpoint.empty() && !do_nothing)
        throw Error("evaluate needs --checkpoint or --do-nothing");
    const GridSpec spec = resolve_grid(cfg.grid);
    CatalogueOptions cat_options;
    cat_options.include_redispatch = cfg.include_redispatch;
    const ActionCatalogue catalogue = build_catalogue(spec, cat_options);
    const std::vector<Scenario> scenarios = load_scenario_dir(spec, cfg.scenario_dir);

    const PolicyShape shape = policy_shape_for(cfg, spec, catalogue);
    PolicyParams params;
    if (do_nothing) {
        params.shape = shape;
        params.theta.assign(static_cast<size_t>(shape.param_count()), 0.0);
    } else {
        params = load_checkpoint(checkpoint, shape);
    }

    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    std::vector<std::unique_ptr<ReplayWriter>> writers;
    for (size_t i = 0; i < scenarios.size(); ++i) {
        std::ostringstream name;
        name << "replay_" << std::setw(3) << std::setfill('0') << i << ".csv";
        writers.push_back(std::make_unique<ReplayWriter>(out / name.str()));
    }

    EpisodeOptions options;
    options.k = cfg.train.k;
    options.gamma = cfg.train.gamma;
    options.max_steps = cfg.train.max_steps;
    options.force_do_nothing = do_nothing;
    EnvOptions env_options;
    env_options.simulate_budget = cfg.simulate_budget;

    const EvalReport report = evaluate_policy(
        spec, scenarios, catalogue, params, options, env_options,
        [&](int scenario, const ReplayRecord& r) { writers[static_cast<size_t>(scenario)]->append(r); });

    std::ostringstream text;
    text << "episodes " << report.episodes.size() << "\n";
    text << "mean_return " << report.mean_return << "\n";
    text << "mean_steps " << report.mean_steps << "\n";
    text << "fallback_rate " << report.fallback_rate << "\n";
    for (const auto& e : report.episodes)
        text << "scenario " << e.scenario << ": return " << e.episode_return << ", steps "
             << e.steps << ", mean risk " << e.mean_risk << ", end " << to_string(e.reason)
             << "\n";
    std::cout << text.str();
    std::ofstream(out / "report.txt") << text.str();
    return 0;
}

int cmd_ablate_k(RunConfig cfg, const std::vector<int>& ks, bool resume) {
    const std::string base_out = cfg.out_dir;
    for (const int k : ks) {
        RunConfig run = cfg;
        run.train.k = k;
        run.out_dir = (fs::path(base_out) / ("k_" + std::to_string(k))).string();
        std::cout << "=== action set size " << k << " -> " << run.out_dir << "\n";
        cmd_train(run, resume);
    }
    return 0;
}

int cmd_replay(const std::string& log_path) {
    const std::vector<ReplayRecord> records = read_replay(log_path);
    std::cout << "step  action  reward   risk    k  survivors  predicted  flags\n";
    for (const auto& r : records) {
        std::cout << std::setw(4) << r.step << "  " << std::setw(6) << r.action_index << "  "
                  << std::setw(6) << std::setprecision(4) << r.reward << "  " << std::setw(6)
                  << r.risk << "  " << std::setw(3) << r.k << "  " << std::setw(9) << r.survivors
                  << "  " << std::setw(9) << r.predicted_risk << "  "
                  << (r.fallback ? "fallback " : "") << (r.done ? "done" : "") << "\n";
    }
    std::cout << records.size() << " steps\n";
    return 0;
}

int cmd_worker(const std::string& config_path, uint32_t worker_id) {
    const RunConfig cfg = load_run_config(config_path);
    auto backend = make_backend(cfg);
    return run_worker_loop(0, 1, *backend, worker_id);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"search-with-action-set power grid management"};
    app.require_subcommand(1);

    // gen-scenarios
    auto* gen = app.add_subcommand("gen-scenarios", "generate chronics and attack schedules");
    std::string gen_grid = "case5", gen_out = "scenarios";
    uint64_t gen_seed = 1;
    ScenarioGenOptions gen_options;
    std::vector<int> gen_attack_lines;
    gen->add_option("--grid", gen_grid, "preset name or grid file");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_options.count, "number of scenarios");
    gen->add_option("--length", gen_options.length, "steps per scenario (288 = one day)");
    gen->add_option("--attack-rate", gen_options.attack_rate, "expected attacks per day");
    gen->add_option("--attack-duration-min", gen_options.attack_duration_min);
    gen->add_option("--attack-duration-max", gen_options.attack_duration_max);
    gen->add_option("--attack-lines", gen_attack_lines, "restrict attacks to these lines");
    gen->add_option("--min-attacks", gen_options.min_attacks, "floor on attacks per scenario");
    std::vector<double> gen_load_shares;
    gen->add_option("--load-shares", gen_load_shares, "per-load demand fractions");
    gen->add_option("--utilization", gen_options.utilization, "mean demand / total capacity");
    gen->add_option("--daily-swing", gen_options.daily_swing, "sinusoid amplitude");
    gen->add_option("--noise", gen_options.noise, "per-step demand noise");
    gen->add_option("--renew-walk", gen_options.renew_walk, "renewable walk step fraction");
    gen->add_option("--seed", gen_seed);

    // shared run options
    auto add_run_options = [](CLI::App* cmd, RunConfig& cfg, std::string& config_file,
                              std::string& hidden) {
        cmd->add_option("--config", config_file, "flat key = value config file");
        cmd->add_option("--grid", cfg.grid);
        cmd->add_option("--scenarios", cfg.scenario_dir);
        cmd->add_option("--out", cfg.out_dir);
        cmd->add_option("--workers", cfg.workers);
        cmd->add_flag("--process-workers", cfg.process_workers,
                      "run rollouts in worker processes");
        cmd->add_option("--hidden", hidden, "three hidden widths, comma separated");
        cmd->add_flag("--redispatch", cfg.include_redispatch);
        cmd->add_option("--simulate-budget", cfg.simulate_budget);
        cmd->add_option("--checkpoint-interval", cfg.checkpoint_interval);
        cmd->add_option("--population", cfg.train.population);
        cmd->add_option("--sigma", cfg.train.sigma);
        cmd->add_option("--alpha", cfg.train.alpha);
        cmd->add_option("--k", cfg.train.k);
        cmd->add_option("--episodes", cfg.train.episodes_per_perturbation);
        cmd->add_option("--iterations", cfg.train.iterations);
        cmd->add_option("--gamma", cfg.train.gamma);
        cmd->add_option("--antithetic", cfg.train.antithetic);
        cmd->add_option("--rank-shaping", cfg.train.rank_shaping);
        cmd->add_option("--quorum", cfg.train.quorum);
        cmd->add_option("--seed", cfg.train.seed);
        cmd->add_option("--max-steps", cfg.train.max_steps);
    };

    RunConfig train_cfg;
    std::string train_config_file, train_hidden;
    bool train_resume = false;
    auto* train = app.add_subcommand("train", "optimize the policy with distributed rollouts");
    add_run_options(train, train_cfg, train_config_file, train_hidden);
    train->add_flag("--resume", train_resume, "continue from the out dir's saved state");

    RunConfig eval_cfg;
    std::string eval_config_file, eval_hidden, eval_checkpoint;
    bool eval_do_nothing = false;
    auto* eval = app.add_subcommand("evaluate", "greedy rollout of a checkpoint over scenarios");
    add_run_options(eval, eval_cfg, eval_config_file, eval_hidden);
    eval->add_option("--checkpoint", eval_checkpoint);
    eval->add_flag("--do-nothing", eval_do_nothing, "ignore the policy, baseline rollout");

    RunConfig ablate_cfg;
    std::string ablate_config_file, ablate_hidden;
    std::vector<int> ablate_ks;
    auto* ablate = app.add_subcommand("ablate-k", "train once per action-set size");
    add_run_options(ablate, ablate_cfg, ablate_config_file, ablate_hidden);
    ablate->add_option("--ks", ablate_ks, "action set sizes")->required();

    std::string replay_log;
    auto* replay = app.add_subcommand("replay", "pretty-print a replay log");
    replay->add_option("--log", replay_log)->required();

    std::string dump_grid = "case5";
    bool dump_redispatch = false;
    auto* dump = app.add_subcommand("dump-catalogue", "list the action catalogue");
    dump->add_option("--grid", dump_grid);
    dump->add_flag("--redispatch", dump_redispatch);

    std::string worker_config;
    uint32_t worker_id = 0;
    auto* worker = app.add_subcommand("worker", "internal: serve rollout tasks on stdio");
    worker->add_option("--config", worker_config)->required();
    worker->add_option("--worker-id", worker_id);

    CLI11_PARSE(app, argc, argv);

    // precedence: config file < environment < command line
    auto resolve = [&](CLI::App* cmd, RunConfig& cfg, const std::string& config_file,
                       const std::string& hidden) {
        RunConfig resolved;
        if (!config_file.empty()) resolved = load_run_config(config_file);
        apply_env_overrides(resolved);
        for (const auto* option : cmd->get_options()) {
            if (option->count() == 0) continue;
            const std::string name = option->get_name();
            if (name == "--grid") resolved.grid = cfg.grid;
            else if (name == "--scenarios") resolved.scenario_dir = cfg.scenario_dir;
            else if (name == "--out") resolved.out_dir = cfg.out_dir;
            else if (name == "--workers") resolved.workers = cfg.workers;
            else if (name == "--process-workers") resolved.process_workers = cfg.process_workers;
            else if (name == "--redispatch") resolved.include_redispatch = cfg.include_redispatch;
            else if (name == "--simulate-budget") resolved.simulate_budget = cfg.simulate_budget;
            else if (name == "--checkpoint-interval")
                resolved.checkpoint_interval = cfg.checkpoint_interval;
            else if (name == "--population") resolved.train.population = cfg.train.population;
            else if (name == "--sigma") resolved.train.sigma = cfg.train.sigma;
            else if (name == "--alpha") resolved.train.alpha = cfg.train.alpha;
            else if (name == "--k") resolved.train.k = cfg.train.k;
            else if (name == "--episodes")
                resolved.train.episodes_per_perturbation = cfg.train.episodes_per_perturbation;
            else if (name == "--iterations") resolved.train.iterations = cfg.train.iterations;
            else if (name == "--gamma") resolved.train.gamma = cfg.train.gamma;
            else if (name == "--antithetic") resolved.train.antithetic = cfg.train.antithetic;
            else if (name == "--rank-shaping") resolved.train.rank_shaping = cfg.train.rank_shaping;
            else if (name == "--quorum") resolved.train.quorum = cfg.train.quorum;
            else if (name == "--seed") resolved.train.seed = cfg.train.seed;
            else if (name == "--max-steps") resolved.train.max_steps = cfg.train.max_steps;
        }
        if (cmd->count("--hidden") > 0) {
            std::istringstream in(hidden);
            std::string field;
            for (auto& h : resolved.hidden) {
                std::getline(in, field, ',');
                h = std::stoi(field);
            }
        }
        return resolved;
    };

    try {
        if (gen->parsed()) {
            gen_options.attack_lines = gen_attack_lines;
            gen_options.load_shares = gen_load_shares;
            return cmd_gen_scenarios(gen_grid, gen_out, gen_options, gen_seed);
        }
        if (train->parsed())
            return cmd_train(resolve(train, train_cfg, train_config_file, train_hidden),
                             train_resume);
        if (eval->parsed())
            return cmd_evaluate(resolve(eval, eval_cfg, eval_config_file, eval_hidden),
                                eval_checkpoint, eval_do_nothing);
        if (ablate->parsed())
            return cmd_ablate_k(resolve(ablate, ablate_cfg, ablate_config_file, ablate_hidden),
                                ablate_ks, false);
        if (replay->parsed()) return cmd_replay(replay_log);
        if (dump->parsed()) {
            const GridSpec spec = resolve_grid(dump_grid);
            CatalogueOptions options;
            options.include_redispatch = dump_redispatch;
            std::cout << dump_catalogue(spec, build_catalogue(spec, options));
            return 0;
        }
        if (worker->parsed()) return cmd_worker(worker_config, worker_id);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
