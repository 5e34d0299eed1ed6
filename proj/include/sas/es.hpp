#ifndef SAS_ES_HPP
#define SAS_ES_HPP

#include <chrono>
#include <functional>
#include <span>
#include <vector>

#include "sas/catalogue.hpp"
#include "sas/environment.hpp"
#include "sas/planner.hpp"
#include "sas/policy.hpp"
#include "sas/workers.hpp"

namespace sas {

struct TrainConfig {
    int population = 32;    // n: perturbations per iteration
    double sigma = 0.1;     // noise standard deviation
    double alpha = 0.05;    // learning rate
    int k = 100;            // action-set size, clipped to the catalogue
    int episodes_per_perturbation = 1;
    int iterations = 50;
    double gamma = 1.0;     // episode return discount
    bool antithetic = true;
    bool rank_shaping = true;
    double quorum = 1.0;    // fraction of population results required
    uint64_t seed = 0;
    int max_steps = 0;      // per episode; 0 = until scenario end
    std::chrono::milliseconds task_timeout{600000};
};

void check_config(const TrainConfig& cfg);  // throws Error on bad invariants

struct RolloutResult {
    uint64_t task_id = 0;
    uint64_t noise_seed = 0;
    int8_t sign = 1;
    double episode_return = 0.0;
    int steps = 0;
    double mean_risk = 0.0;
    uint64_t scenario_id = 0;
};

// g = 1/(n sigma) * sum_i w_i eps(seed_i, sign_i), summed in task-id order.
// With rank shaping the raw returns are replaced by centered ranks in
// [-0.5, 0.5] (ties averaged). Antithetic pairs are combined per seed so
// equal returns cancel exactly. Incomplete antithetic pairs are dropped.
std::vector<double> estimate_gradient(std::span<const RolloutResult> results,
                                      const TrainConfig& cfg, size_t dim);

struct IterationStats {
    int iteration = 0;
    double mean_return = 0.0;
    double std_return = 0.0;
    double max_return = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
    int results = 0;
};

// Algorithm driver: owns theta, derives per-iteration noise seeds from the
// config seed, and is deterministic given (initial params, config, scenario
// count) regardless of pool type or scheduling.
class Trainer {
public:
    Trainer(PolicyParams initial, TrainConfig cfg, WorkerPool& pool, int num_scenarios);

    IterationStats run_iteration();  // throws WorkerPoolFailure below quorum
    const PolicyParams& params() const { return params_; }
    const TrainConfig& config() const { return cfg_; }
    int iteration() const { return iteration_; }
    void set_iteration(int iteration) { iteration_ = iteration; }  // resume

    std::vector<TaskMessage> make_tasks() const;

private:
    PolicyParams params_;
    TrainConfig cfg_;
    WorkerPool& pool_;
    int num_scenarios_;
    int iteration_ = 0;
};

// ---------------------------------------------------------------------------
// grid rollouts

struct ReplayRecord {
    int step = 0;
    int action_index = 0;
    double reward = 0.0;
    double risk = 0.0;
    bool done = false;
    int k = 0;
    int survivors = 0;
    double predicted_risk = 0.0;
    bool fallback = false;
};

using ReplaySink = std::function<void(const ReplayRecord&)>;

struct EpisodeOptions {
    int k = 1;
    double gamma = 1.0;
    int max_steps = 0;           // 0 = until done
    bool force_do_nothing = false;  // baseline mode: ignore the policy
};

struct EpisodeResult {
    double episode_return = 0.0;
    int steps = 0;
    double mean_risk = 0.0;
    int fallback_steps = 0;
    TerminationReason reason = TerminationReason::none;
};

EpisodeResult run_episode(Environment& env, const ActionCatalogue& catalogue,
                          const PolicyParams& params, const EpisodeOptions& options,
                          const ReplaySink& sink = nullptr);

// Executes perturbation rollouts on the grid; pure in (task, base params).
class GridRolloutBackend final : public RolloutBackend {
public:
    GridRolloutBackend(GridSpec spec, std::vector<Scenario> scenarios,
                       CatalogueOptions catalogue_options, EnvOptions env_options, double gamma,
                       int episodes_per_perturbation);

    RolloutStats run(const TaskMessage& task, const PolicyParams& base) override;

    const ActionCatalogue& catalogue() const { return catalogue_; }

private:
    GridSpec spec_;
    std::vector<Scenario> scenarios_;
    ActionCatalogue catalogue_;
    EnvOptions env_options_;
    double gamma_;
    int episodes_;
};

// ---------------------------------------------------------------------------
// greedy evaluation (no parameter noise)

struct EvalEpisode {
    int scenario = 0;
    double episode_return = 0.0;
    int steps = 0;
    double mean_risk = 0.0;
    double fallback_rate = 0.0;
    TerminationReason reason = TerminationReason::none;
};

struct EvalReport {
    double mean_return = 0.0;
    double mean_steps = 0.0;
    double fallback_rate = 0.0;
    std::vector<EvalEpisode> episodes;
};

// scenario_sink, when set, receives (scenario index, record) per step
using ScenarioReplaySink = std::function<void(int, const ReplayRecord&)>;

EvalReport evaluate_policy(const GridSpec& spec, const std::vector<Scenario>& scenarios,
                           const ActionCatalogue& catalogue, const PolicyParams& params,
                           const EpisodeOptions& options, const EnvOptions& env_options = {},
                           const ScenarioReplaySink& sink = nullptr);

}  // namespace sas

#endif
