#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "stub_backend.hpp"
#include "sas/errors.hpp"
#include "sas/es.hpp"
#include "sas/logio.hpp"

using namespace sas;
using namespace sas::testing;

namespace {

RolloutResult make_result(uint64_t task_id, uint64_t seed, int8_t sign, double ret) {
    RolloutResult r;
    r.task_id = task_id;
    r.noise_seed = seed;
    r.sign = sign;
    r.episode_return = ret;
    return r;
}

}  // namespace

TEST_CASE("config invariants are enforced") {
    TrainConfig cfg;
    CHECK_NOTHROW(check_config(cfg));
    cfg.population = 3;
    cfg.antithetic = true;
    CHECK_THROWS_AS(check_config(cfg), Error);
    cfg.population = 4;
    cfg.sigma = 0.0;
    CHECK_THROWS_AS(check_config(cfg), Error);
    cfg.sigma = 0.1;
    cfg.gamma = 1.5;
    CHECK_THROWS_AS(check_config(cfg), Error);
}

TEST_CASE("gradient formula on an antithetic pair") {
    TrainConfig cfg;
    cfg.population = 2;
    cfg.sigma = 0.5;
    cfg.antithetic = true;
    cfg.rank_shaping = false;

    const uint64_t seed = 4321;
    const std::vector<RolloutResult> results{make_result(0, seed, 1, 2.0),
                                             make_result(1, seed, -1, 0.0)};
    const auto grad = estimate_gradient(results, cfg, 8);
    // 1/(n*sigma) * (r+ - r-) * eps = 1/(2*0.5) * 2 * eps = 2 eps
    for (size_t j = 0; j < grad.size(); ++j) CHECK(grad[j] == 2.0 * rng::gaussian_at(seed, j));
}

TEST_CASE("equal returns cancel to a bitwise-zero gradient") {
    TrainConfig cfg;
    cfg.population = 6;
    cfg.sigma = 0.1;
    cfg.antithetic = true;

    for (const bool shaping : {false, true}) {
        cfg.rank_shaping = shaping;
        std::vector<RolloutResult> results;
        for (uint64_t pair = 0; pair < 3; ++pair) {
            results.push_back(make_result(2 * pair, 100 + pair, 1, 7.25));
            results.push_back(make_result(2 * pair + 1, 100 + pair, -1, 7.25));
        }
        const auto grad = estimate_gradient(results, cfg, 32);
        for (const double g : grad) CHECK(g == 0.0);
    }
}

TEST_CASE("rank shaping uses centered ranks and ignores return scale") {
    TrainConfig cfg;
    cfg.population = 3;
    cfg.sigma = 0.2;
    cfg.antithetic = false;
    cfg.rank_shaping = true;

    const std::vector<RolloutResult> results{make_result(0, 11, 1, 1.0),
                                             make_result(1, 22, 1, 5.0),
                                             make_result(2, 33, 1, 3.0)};
    const auto grad = estimate_gradient(results, cfg, 4);

    // returns [1, 5, 3] -> weights [-0.5, +0.5, 0]
    for (size_t j = 0; j < grad.size(); ++j) {
        const double expected =
            (-0.5 * rng::gaussian_at(11, j) + 0.5 * rng::gaussian_at(22, j)) / (3 * 0.2);
        CHECK(grad[j] == doctest::Approx(expected).epsilon(1e-15));
    }

    // any strictly monotone transform of the returns gives the identical gradient
    const std::vector<RolloutResult> squashed{make_result(0, 11, 1, -100.0),
                                              make_result(1, 22, 1, 3e6),
                                              make_result(2, 33, 1, 0.125)};
    CHECK(bitwise_equal(grad, estimate_gradient(squashed, cfg, 4)));
}

TEST_CASE("gradient is invariant to result arrival order") {
    TrainConfig cfg;
    cfg.population = 8;
    cfg.sigma = 0.3;
    cfg.antithetic = true;
    cfg.rank_shaping = true;

    std::vector<RolloutResult> results;
    for (uint64_t pair = 0; pair < 4; ++pair) {
        results.push_back(make_result(2 * pair, 50 + pair, 1, static_cast<double>(pair * pair)));
        results.push_back(make_result(2 * pair + 1, 50 + pair, -1, 3.0 - static_cast<double>(pair)));
    }
    const auto reference = estimate_gradient(results, cfg, 16);

    std::mt19937 shuffler(7);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(results.begin(), results.end(), shuffler);
        CHECK(bitwise_equal(reference, estimate_gradient(results, cfg, 16)));
    }
}

TEST_CASE("zero returns leave the parameters untouched") {
    TrainConfig cfg;
    cfg.population = 8;
    cfg.iterations = 3;
    cfg.seed = 5;

    InprocWorkerPool pool(2, [] { return std::make_unique<ZeroBackend>(); });
    Trainer trainer(flat_params(16, 0.25), cfg, pool, 1);
    const std::vector<double> before = trainer.params().theta;
    for (int i = 0; i < 3; ++i) {
        const IterationStats stats = trainer.run_iteration();
        CHECK(stats.grad_norm == 0.0);
    }
    CHECK(bitwise_equal(before, trainer.params().theta));
}

TEST_CASE("one iteration applies exactly alpha times the gradient") {
    TrainConfig cfg;
    cfg.population = 8;
    cfg.sigma = 0.1;
    cfg.alpha = 0.05;
    cfg.seed = 99;
    cfg.rank_shaping = false;

    const uint64_t target_seed = 31;
    InprocWorkerPool pool(2, [&] { return std::make_unique<QuadraticBackend>(16, target_seed); });
    Trainer trainer(flat_params(16), cfg, pool, 1);
    const PolicyParams theta0 = trainer.params();

    // reproduce the update by hand from the same task definitions
    const std::vector<TaskMessage> tasks = trainer.make_tasks();
    QuadraticBackend oracle(16, target_seed);
    std::vector<RolloutResult> results;
    for (const auto& t : tasks) {
        RolloutResult r;
        r.task_id = t.task_id;
        r.noise_seed = t.noise_seed;
        r.sign = t.sign;
        r.episode_return = oracle.run(t, theta0).episode_return;
        results.push_back(r);
    }
    const auto grad = estimate_gradient(results, cfg, theta0.theta.size());

    const IterationStats stats = trainer.run_iteration();
    for (size_t j = 0; j < theta0.theta.size(); ++j)
        CHECK(trainer.params().theta[j] == theta0.theta[j] + cfg.alpha * grad[j]);

    // step length: ||theta1 - theta0|| = alpha * ||g||
    CHECK(distance(trainer.params().theta, theta0.theta) ==
          doctest::Approx(cfg.alpha * stats.grad_norm).epsilon(1e-12));
}

TEST_CASE("trainer walks the quadratic stub to its optimum") {
    TrainConfig cfg;
    cfg.population = 16;
    cfg.sigma = 0.1;
    cfg.alpha = 0.05;
    cfg.seed = 1;
    cfg.antithetic = true;
    cfg.rank_shaping = false;

    const uint64_t target_seed = 77;
    InprocWorkerPool pool(2, [&] { return std::make_unique<QuadraticBackend>(16, target_seed); });
    Trainer trainer(flat_params(16), cfg, pool, 1);
    const QuadraticBackend oracle(16, target_seed);

    const double start = distance(trainer.params().theta, oracle.target());
    double best = start;
    for (int i = 0; i < 150 && best > 1e-2; ++i) {
        trainer.run_iteration();
        best = std::min(best, distance(trainer.params().theta, oracle.target()));
    }
    CHECK(best < 1e-2);
    CHECK(best < start);
}

TEST_CASE("training is bitwise reproducible") {
    TrainConfig cfg;
    cfg.population = 8;
    cfg.sigma = 0.1;
    cfg.alpha = 0.03;
    cfg.seed = 12;

    auto run = [&] {
        InprocWorkerPool pool(2, [] { return std::make_unique<QuadraticBackend>(16, 8); });
        Trainer trainer(flat_params(16), cfg, pool, 3);
        for (int i = 0; i < 3; ++i) trainer.run_iteration();
        return trainer.params().theta;
    };
    CHECK(bitwise_equal(run(), run()));
}

TEST_CASE("quorum shortfall raises WorkerPoolFailure") {
    // a pool that silently loses the odd-numbered half of the population
    class LossyPool final : public WorkerPool {
    public:
        int worker_count() const override { return 1; }
        int broadcast_params(const PolicyParams& params, uint64_t) override {
            held = params;
            return 1;
        }
        DispatchOutcome dispatch_and_collect(std::span<const TaskMessage> tasks,
                                             std::chrono::milliseconds) override {
            DispatchOutcome out;
            ZeroBackend backend;
            for (const auto& t : tasks) {
                if (t.task_id % 2 == 1) {
                    out.missing.push_back(t.task_id);
                    continue;
                }
                ResultMessage r;
                r.task_id = t.task_id;
                r.episode_return = backend.run(t, held).episode_return;
                out.results.push_back(r);
            }
            return out;
        }
        PolicyParams held;
    };

    TrainConfig cfg;
    cfg.population = 8;
    cfg.seed = 3;

    LossyPool pool;
    Trainer strict(flat_params(16), cfg, pool, 1);
    CHECK_THROWS_AS(strict.run_iteration(), WorkerPoolFailure);

    cfg.quorum = 0.5;  // half the population is acceptable
    Trainer tolerant(flat_params(16), cfg, pool, 1);
    CHECK_NOTHROW(tolerant.run_iteration());
}

TEST_CASE("episode rollout accounting matches the environment") {
    const GridSpec spec = GridSpec::case5();
    const ActionCatalogue cat = build_catalogue(spec);
    const PolicyShape shape{Environment::observation_dim(spec), {16, 12, 8}, cat.size()};
    const PolicyParams params = init_policy(shape, 21);

    EpisodeOptions options;
    options.k = 8;

    // gamma = 1: the rollout return equals the plain reward sum
    Environment env(spec, flat_scenario(spec, 15, 90.0), 0);
    Environment mirror(spec, flat_scenario(spec, 15, 90.0), 0);
    const EpisodeResult episode = run_episode(env, cat, params, options);

    double replayed = 0.0;
    int steps = 0;
    while (!mirror.done()) {
        const auto [action, diag] = select_action(mirror, cat, params, options.k);
        replayed += mirror.step(action).reward;
        ++steps;
    }
    CHECK(episode.episode_return == doctest::Approx(replayed).epsilon(1e-12));
    CHECK(episode.steps == steps);
    CHECK(episode.reason == TerminationReason::end_of_scenario);
}

TEST_CASE("grid rollout backend is a pure function of the task") {
    const GridSpec spec = GridSpec::case5();
    std::vector<Scenario> scenarios{flat_scenario(spec, 12, 90.0), flat_scenario(spec, 12, 100.0)};
    const ActionCatalogue cat = build_catalogue(spec);
    const PolicyShape shape{Environment::observation_dim(spec), {16, 12, 8}, cat.size()};
    const PolicyParams base = init_policy(shape, 3);

    GridRolloutBackend a(spec, scenarios, {}, {}, 1.0, 1);
    GridRolloutBackend b(spec, scenarios, {}, {}, 1.0, 1);

    TaskMessage task;
    task.noise_seed = 42;
    task.sign = -1;
    task.sigma = 0.05;
    task.scenario_id = 1;
    task.k = 6;

    const RolloutStats r1 = a.run(task, base);
    const RolloutStats r2 = b.run(task, base);
    CHECK(r1.episode_return == r2.episode_return);
    CHECK(r1.steps_survived == r2.steps_survived);
    CHECK(r1.mean_risk == r2.mean_risk);
    CHECK(r1.steps_survived == 11);  // survives the whole flat scenario
}

TEST_CASE("greedy evaluation produces a well-formed report") {
    const GridSpec spec = GridSpec::case5();
    const std::vector<Scenario> scenarios{flat_scenario(spec, 12, 90.0),
                                          flat_scenario(spec, 12, 95.0)};
    const ActionCatalogue cat = build_catalogue(spec);
    const PolicyShape shape{Environment::observation_dim(spec), {16, 12, 8}, cat.size()};

    // the zero policy proposes uniformly; the report must still be sound
    PolicyParams zero;
    zero.shape = shape;
    zero.theta.assign(static_cast<size_t>(shape.param_count()), 0.0);

    EpisodeOptions options;
    options.k = 4;
    const EvalReport report = evaluate_policy(spec, scenarios, cat, zero, options);
    CHECK(report.episodes.size() == 2);
    CHECK(report.mean_steps > 0);
    CHECK(report.fallback_rate >= 0.0);
    CHECK(report.fallback_rate <= 1.0);

    // do-nothing baseline mode ignores the policy
    EpisodeOptions baseline;
    baseline.force_do_nothing = true;
    const EvalReport base_report = evaluate_policy(spec, scenarios, cat, zero, baseline);
    CHECK(base_report.mean_steps == 11.0);
    CHECK(base_report.mean_return == doctest::Approx(11.0));

    CHECK_THROWS_AS(evaluate_policy(spec, {}, cat, zero, options), Error);
}
