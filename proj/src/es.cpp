#include "sas/es.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sas/errors.hpp"
#include "sas/rng.hpp"

namespace sas {

void check_config(const TrainConfig& cfg) {
    if (cfg.population < 1) throw Error("population must be positive");
    if (cfg.antithetic && cfg.population % 2 != 0)
        throw Error("antithetic sampling needs an even population");
    if (cfg.sigma <= 0.0) throw Error("sigma must be positive");
    if (cfg.alpha <= 0.0) throw Error("alpha must be positive");
    if (cfg.gamma <= 0.0 || cfg.gamma > 1.0) throw Error("gamma must be in (0, 1]");
    if (cfg.k < 1) throw Error("action set size must be at least 1");
    if (cfg.episodes_per_perturbation < 1) throw Error("episodes per perturbation");
    if (cfg.quorum <= 0.0 || cfg.quorum > 1.0) throw Error("quorum must be in (0, 1]");
}

namespace {

// centered ranks in [-0.5, 0.5]; tied returns share the average rank so
// that identical returns get identical weights
std::vector<double> centered_ranks(const std::vector<double>& returns) {
    const size_t n = returns.size();
    std::vector<double> weights(n, 0.0);
    if (n < 2) return weights;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return returns[a] < returns[b]; });

    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && returns[order[j + 1]] == returns[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j);
        for (size_t p = i; p <= j; ++p)
            weights[order[p]] = avg_rank / static_cast<double>(n - 1) - 0.5;
        i = j + 1;
    }
    return weights;
}

}  // namespace

std::vector<double> estimate_gradient(std::span<const RolloutResult> results,
                                      const TrainConfig& cfg, size_t dim) {
    std::vector<double> grad(dim, 0.0);
    if (results.empty()) return grad;

    // fixed reduction order regardless of arrival order
    std::vector<RolloutResult> ordered(results.begin(), results.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const RolloutResult& a, const RolloutResult& b) { return a.task_id < b.task_id; });

    std::vector<double> returns(ordered.size());
    for (size_t i = 0; i < ordered.size(); ++i) returns[i] = ordered[i].episode_return;
    const std::vector<double> weights = cfg.rank_shaping ? centered_ranks(returns) : returns;

    size_t used = 0;
    auto accumulate = [&](uint64_t seed, double scale) {
        if (scale == 0.0) return;
        for (size_t j = 0; j < dim; ++j) grad[j] += scale * rng::gaussian_at(seed, j);
    };

    if (cfg.antithetic) {
        // combine each +/- pair first so equal returns cancel exactly
        for (size_t i = 0; i < ordered.size();) {
            if (i + 1 < ordered.size() && ordered[i + 1].noise_seed == ordered[i].noise_seed &&
                ordered[i].sign != ordered[i + 1].sign) {
                const double w_plus = ordered[i].sign > 0 ? weights[i] : weights[i + 1];
                const double w_minus = ordered[i].sign > 0 ? weights[i + 1] : weights[i];
                accumulate(ordered[i].noise_seed, w_plus - w_minus);
                used += 2;
                i += 2;
            } else {
                ++i;  // orphaned half of a pair: dropped
            }
        }
    } else {
        for (size_t i = 0; i < ordered.size(); ++i) {
            accumulate(ordered[i].noise_seed, static_cast<double>(ordered[i].sign) * weights[i]);
            ++used;
        }
    }

    if (used == 0) return std::vector<double>(dim, 0.0);
    const double norm = 1.0 / (static_cast<double>(used) * cfg.sigma);
    for (auto& g : grad) g *= norm;
    return grad;
}

Trainer::Trainer(PolicyParams initial, TrainConfig cfg, WorkerPool& pool, int num_scenarios)
    : params_(std::move(initial)), cfg_(cfg), pool_(pool), num_scenarios_(std::max(1, num_scenarios)) {
    check_config(cfg_);
}

std::vector<TaskMessage> Trainer::make_tasks() const {
    std::vector<TaskMessage> tasks;
    tasks.reserve(static_cast<size_t>(cfg_.population));
    const auto iter = static_cast<uint64_t>(iteration_);
    for (int i = 0; i < cfg_.population; ++i) {
        TaskMessage t;
        t.task_id = iter * static_cast<uint64_t>(cfg_.population) + static_cast<uint64_t>(i);
        t.params_version = iter;
        const int pair = cfg_.antithetic ? i / 2 : i;
        t.noise_seed = rng::derive(cfg_.seed, iter, static_cast<uint64_t>(pair));
        t.sign = static_cast<int8_t>(cfg_.antithetic && (i % 2 == 1) ? -1 : 1);
        t.sigma = cfg_.sigma;
        t.scenario_id = iter % static_cast<uint64_t>(num_scenarios_);
        t.k = static_cast<uint32_t>(cfg_.k);
        t.max_steps = static_cast<uint32_t>(cfg_.max_steps);
        tasks.push_back(t);
    }
    return tasks;
}

IterationStats Trainer::run_iteration() {
    const auto start = std::chrono::steady_clock::now();

    pool_.broadcast_params(params_, static_cast<uint64_t>(iteration_));
    const std::vector<TaskMessage> tasks = make_tasks();
    const DispatchOutcome outcome = pool_.dispatch_and_collect(tasks, cfg_.task_timeout);

    const int needed =
        static_cast<int>(std::ceil(cfg_.quorum * static_cast<double>(cfg_.population)));
    if (static_cast<int>(outcome.results.size()) < needed)
        throw WorkerPoolFailure("collected " + std::to_string(outcome.results.size()) + " of " +
                                std::to_string(cfg_.population) + " rollouts (quorum " +
                                std::to_string(needed) + ")");

    std::vector<RolloutResult> results;
    results.reserve(outcome.results.size());
    for (const auto& r : outcome.results) {
        const auto& task = tasks[r.task_id % static_cast<uint64_t>(cfg_.population)];
        RolloutResult rr;
        rr.task_id = r.task_id;
        rr.noise_seed = task.noise_seed;
        rr.sign = task.sign;
        rr.episode_return = r.episode_return;
        rr.steps = static_cast<int>(r.steps_survived);
        rr.mean_risk = r.mean_risk;
        rr.scenario_id = task.scenario_id;
        results.push_back(rr);
    }

    const std::vector<double> grad = estimate_gradient(results, cfg_, params_.theta.size());
    for (size_t j = 0; j < params_.theta.size(); ++j) params_.theta[j] += cfg_.alpha * grad[j];

    IterationStats stats;
    stats.iteration = iteration_;
    stats.results = static_cast<int>(results.size());
    double sum = 0.0, sum_sq = 0.0, best = -1e300;
    for (const auto& r : results) {
        sum += r.episode_return;
        sum_sq += r.episode_return * r.episode_return;
        best = std::max(best, r.episode_return);
    }
    const double n = std::max<double>(1.0, static_cast<double>(results.size()));
    stats.mean_return = sum / n;
    stats.std_return = std::sqrt(std::max(0.0, sum_sq / n - stats.mean_return * stats.mean_return));
    stats.max_return = results.empty() ? 0.0 : best;
    stats.grad_norm = std::sqrt(
        std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    ++iteration_;
    return stats;
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(Environment& env, const ActionCatalogue& catalogue,
                          const PolicyParams& params, const EpisodeOptions& options,
                          const ReplaySink& sink) {
    EpisodeResult result;
    double discount = 1.0;
    double risk_sum = 0.0;

    while (!env.done() && (options.max_steps == 0 || result.steps < options.max_steps)) {
        Action action = Action::nothing();
        SelectionDiagnostics diag;
        if (options.force_do_nothing) {
            diag.chosen_index = 0;
            diag.k = 0;
        } else {
            std::tie(action, diag) = select_action(env, catalogue, params, options.k);
        }
        const StepOutcome outcome = env.step(action);

        result.episode_return += discount * outcome.reward;
        discount *= options.gamma;
        ++result.steps;
        risk_sum += outcome.info.risk;
        result.fallback_steps += diag.fallback ? 1 : 0;
        result.reason = outcome.reason;

        if (sink) {
            ReplayRecord record;
            record.step = env.current_step();
            record.action_index = diag.chosen_index;
            record.reward = outcome.reward;
            record.risk = outcome.info.risk;
            record.done = outcome.done;
            record.k = diag.k;
            record.survivors = diag.survivors;
            record.predicted_risk = diag.predicted_risk;
            record.fallback = diag.fallback;
            sink(record);
        }
        if (outcome.done) break;
    }
    result.mean_risk = result.steps > 0 ? risk_sum / result.steps : 0.0;
    return result;
}

GridRolloutBackend::GridRolloutBackend(GridSpec spec, std::vector<Scenario> scenarios,
                                       CatalogueOptions catalogue_options, EnvOptions env_options,
                                       double gamma, int episodes_per_perturbation)
    : spec_(std::move(spec)),
      scenarios_(std::move(scenarios)),
      catalogue_(build_catalogue(spec_, catalogue_options)),
      env_options_(env_options),
      gamma_(gamma),
      episodes_(std::max(1, episodes_per_perturbation)) {
    if (scenarios_.empty()) throw Error("rollout backend needs at least one scenario");
}

RolloutStats GridRolloutBackend::run(const TaskMessage& task, const PolicyParams& base) {
    const PolicyParams perturbed =
        perturb(base, NoiseSample{task.noise_seed, task.sign}, task.sigma);

    EpisodeOptions options;
    options.k = static_cast<int>(task.k);
    options.gamma = gamma_;
    options.max_steps = static_cast<int>(task.max_steps);

    RolloutStats stats;
    double risk_weighted = 0.0;
    for (int e = 0; e < episodes_; ++e) {
        const size_t idx = (task.scenario_id + static_cast<uint64_t>(e)) % scenarios_.size();
        Environment env(spec_, scenarios_[idx], task.noise_seed, env_options_);
        const EpisodeResult episode = run_episode(env, catalogue_, perturbed, options);
        stats.episode_return += episode.episode_return;
        stats.steps_survived += static_cast<uint32_t>(episode.steps);
        risk_weighted += episode.mean_risk * episode.steps;
    }
    stats.episode_return /= episodes_;  // r_i: mean return per episode
    stats.mean_risk = stats.steps_survived > 0 ? risk_weighted / stats.steps_survived : 0.0;
    return stats;
}

EvalReport evaluate_policy(const GridSpec& spec, const std::vector<Scenario>& scenarios,
                           const ActionCatalogue& catalogue, const PolicyParams& params,
                           const EpisodeOptions& options, const EnvOptions& env_options,
                           const ScenarioReplaySink& sink) {
    if (scenarios.empty()) throw Error("evaluation needs at least one scenario");

    EvalReport report;
    double fallback_total = 0.0;
    for (size_t i = 0; i < scenarios.size(); ++i) {
        Environment env(spec, scenarios[i], 0, env_options);
        ReplaySink episode_sink;
        if (sink)
            episode_sink = [&, i](const ReplayRecord& r) { sink(static_cast<int>(i), r); };
        const EpisodeResult episode = run_episode(env, catalogue, params, options, episode_sink);

        EvalEpisode row;
        row.scenario = static_cast<int>(i);
        row.episode_return = episode.episode_return;
        row.steps = episode.steps;
        row.mean_risk = episode.mean_risk;
        row.fallback_rate =
            episode.steps > 0 ? static_cast<double>(episode.fallback_steps) / episode.steps : 0.0;
        row.reason = episode.reason;
        report.episodes.push_back(row);

        report.mean_return += episode.episode_return;
        report.mean_steps += episode.steps;
        fallback_total += row.fallback_rate;
    }
    const auto n = static_cast<double>(scenarios.size());
    report.mean_return /= n;
    report.mean_steps /= n;
    report.fallback_rate = fallback_total / n;
    return report;
}

}  // namespace sas
