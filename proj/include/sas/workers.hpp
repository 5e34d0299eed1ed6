#ifndef SAS_WORKERS_HPP
#define SAS_WORKERS_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sas/policy.hpp"
#include "sas/wire.hpp"

namespace sas {

using wire::ResultMessage;
using wire::TaskMessage;

struct RolloutStats {
    double episode_return = 0.0;
    uint32_t steps_survived = 0;
    double mean_risk = 0.0;
};

// Executes one rollout task against a base parameter vector. Must be a pure
// function of (task, base): re-dispatching a task to another worker has to
// produce the identical result.
class RolloutBackend {
public:
    virtual ~RolloutBackend() = default;
    virtual RolloutStats run(const TaskMessage& task, const PolicyParams& base) = 0;
};

using BackendFactory = std::function<std::unique_ptr<RolloutBackend>()>;

struct DispatchOutcome {
    std::vector<ResultMessage> results;  // unique per task id, sorted by task id
    std::vector<uint64_t> missing;       // task ids that never resolved
    bool timed_out = false;
};

// Coordinator-side view of a set of rollout workers. Parameters are
// broadcast once per version; tasks reference the version and are
// re-dispatched on worker failure. Collection is idempotent per task id.
class WorkerPool {
public:
    virtual ~WorkerPool() = default;
    virtual int worker_count() const = 0;
    // Returns the number of workers that acknowledged `version`.
    // Throws PartialBroadcast when below the pool quorum.
    virtual int broadcast_params(const PolicyParams& params, uint64_t version) = 0;
    virtual DispatchOutcome dispatch_and_collect(std::span<const TaskMessage> tasks,
                                                 std::chrono::milliseconds timeout) = 0;
};

// Worker threads wired to the coordinator by in-memory frame channels.
// Exercises the same wire codec as the process transport.
class InprocWorkerPool final : public WorkerPool {
public:
    InprocWorkerPool(int workers, BackendFactory factory, double quorum = 1.0);
    ~InprocWorkerPool() override;

    int worker_count() const override;
    int broadcast_params(const PolicyParams& params, uint64_t version) override;
    DispatchOutcome dispatch_and_collect(std::span<const TaskMessage> tasks,
                                         std::chrono::milliseconds timeout) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Local worker processes speaking length-prefixed frames over pipes
// (worker stdin/stdout). `worker_cmd` is the argv to spawn; the pool
// appends `--worker-id N`.
class ProcessWorkerPool final : public WorkerPool {
public:
    ProcessWorkerPool(std::vector<std::string> worker_cmd, int workers, double quorum = 1.0);
    ~ProcessWorkerPool() override;

    int worker_count() const override;
    int live_workers() const;
    int broadcast_params(const PolicyParams& params, uint64_t version) override;
    DispatchOutcome dispatch_and_collect(std::span<const TaskMessage> tasks,
                                         std::chrono::milliseconds timeout) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Worker-side serve loop: reads frames from in_fd, answers on out_fd,
// returns on shutdown or EOF.
int run_worker_loop(int in_fd, int out_fd, RolloutBackend& backend, uint32_t worker_id);

}  // namespace sas

#endif
