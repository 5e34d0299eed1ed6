#include "sas/workers.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "sas/errors.hpp"

namespace sas {

namespace {

using Clock = std::chrono::steady_clock;

// handles one decoded frame on the worker side; returns false on shutdown
bool handle_frame(const std::vector<uint8_t>& raw, RolloutBackend& backend, uint32_t worker_id,
                  std::optional<PolicyParams>& params, uint64_t& held_version,
                  const std::function<void(const std::vector<uint8_t>&)>& reply) {
    const wire::Frame frame = wire::decode_frame(raw);
    switch (frame.type) {
        case wire::MessageType::params_broadcast: {
            const auto msg = wire::decode_params(frame);
            params = deserialize(msg.blob);
            held_version = msg.version;
            reply(wire::encode_ack({msg.version, worker_id}));
            return true;
        }
        case wire::MessageType::task: {
            const auto task = wire::decode_task(frame);
            if (!params.has_value() || held_version != task.params_version) {
                reply(wire::encode_nack({task.task_id, task.params_version, held_version, worker_id}));
                return true;
            }
            const auto start = Clock::now();
            const RolloutStats stats = backend.run(task, *params);
            ResultMessage result;
            result.task_id = task.task_id;
            result.episode_return = stats.episode_return;
            result.steps_survived = stats.steps_survived;
            result.mean_risk = stats.mean_risk;
            result.worker_id = worker_id;
            result.wall_seconds =
                std::chrono::duration<double>(Clock::now() - start).count();
            reply(wire::encode_result(result));
            return true;
        }
        case wire::MessageType::shutdown:
            return false;
        default:
            // coordinator-bound frames are not expected here
            return true;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// in-process pool

namespace {

struct FrameChannel {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::vector<uint8_t>> queue;

    void push(std::vector<uint8_t> frame) {
        {
            std::lock_guard lock(mutex);
            queue.push_back(std::move(frame));
        }
        cv.notify_one();
    }

    std::optional<std::vector<uint8_t>> pop_until(Clock::time_point deadline) {
        std::unique_lock lock(mutex);
        if (!cv.wait_until(lock, deadline, [&] { return !queue.empty(); })) return std::nullopt;
        auto frame = std::move(queue.front());
        queue.pop_front();
        return frame;
    }

    std::optional<std::vector<uint8_t>> pop_blocking() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return !queue.empty(); });
        auto frame = std::move(queue.front());
        queue.pop_front();
        return frame;
    }
};

}  // namespace

struct InprocWorkerPool::Impl {
    std::vector<std::unique_ptr<FrameChannel>> inbox;
    FrameChannel outbox;
    std::vector<std::thread> threads;
    double quorum = 1.0;
    std::vector<uint8_t> cached_params_frame;
    uint64_t cached_version = ~0ull;

    void worker_main(int id, RolloutBackend& backend) {
        std::optional<PolicyParams> params;
        uint64_t held_version = ~0ull;
        auto reply = [&](const std::vector<uint8_t>& frame) { outbox.push(frame); };
        while (true) {
            auto frame = inbox[static_cast<size_t>(id)]->pop_blocking();
            if (!handle_frame(*frame, backend, static_cast<uint32_t>(id), params, held_version, reply))
                break;
        }
    }
};

InprocWorkerPool::InprocWorkerPool(int workers, BackendFactory factory, double quorum)
    : impl_(std::make_unique<Impl>()) {
    if (workers < 1) throw Error("worker pool needs at least one worker");
    impl_->quorum = quorum;
    for (int i = 0; i < workers; ++i) impl_->inbox.push_back(std::make_unique<FrameChannel>());
    for (int i = 0; i < workers; ++i) {
        impl_->threads.emplace_back(
            [impl = impl_.get(), i, backend = factory()]() mutable { impl->worker_main(i, *backend); });
    }
}

InprocWorkerPool::~InprocWorkerPool() {
    for (auto& inbox : impl_->inbox) inbox->push(wire::encode_shutdown());
    for (auto& t : impl_->threads) t.join();
}

int InprocWorkerPool::worker_count() const { return static_cast<int>(impl_->threads.size()); }

int InprocWorkerPool::broadcast_params(const PolicyParams& params, uint64_t version) {
    impl_->cached_params_frame = wire::encode_params({version, serialize(params)});
    impl_->cached_version = version;
    for (auto& inbox : impl_->inbox) inbox->push(impl_->cached_params_frame);

    const auto deadline = Clock::now() + std::chrono::seconds(60);
    int acks = 0;
    while (acks < worker_count()) {
        auto raw = impl_->outbox.pop_until(deadline);
        if (!raw) break;
        const auto frame = wire::decode_frame(*raw);
        if (frame.type == wire::MessageType::params_ack &&
            wire::decode_ack(frame).version == version)
            ++acks;
        // stale results from an earlier dispatch are dropped here
    }
    const int needed = static_cast<int>(std::ceil(impl_->quorum * worker_count()));
    if (acks < needed)
        throw PartialBroadcast("only " + std::to_string(acks) + " of " +
                               std::to_string(worker_count()) + " workers acknowledged");
    return acks;
}

DispatchOutcome InprocWorkerPool::dispatch_and_collect(std::span<const TaskMessage> tasks,
                                                       std::chrono::milliseconds timeout) {
    DispatchOutcome outcome;
    std::set<uint64_t> expected;
    for (const auto& t : tasks) expected.insert(t.task_id);

    std::deque<TaskMessage> pending(tasks.begin(), tasks.end());
    std::map<uint64_t, ResultMessage> collected;
    std::map<uint32_t, TaskMessage> in_flight;  // worker id -> task
    const auto deadline = Clock::now() + timeout;

    auto assign = [&](uint32_t worker) {
        if (pending.empty()) return;
        const TaskMessage task = pending.front();
        pending.pop_front();
        in_flight[worker] = task;
        impl_->inbox[worker]->push(wire::encode_task(task));
    };
    for (uint32_t w = 0; w < static_cast<uint32_t>(worker_count()); ++w) assign(w);

    while (collected.size() < expected.size()) {
        auto raw = impl_->outbox.pop_until(deadline);
        if (!raw) {
            outcome.timed_out = true;
            break;
        }
        const auto frame = wire::decode_frame(*raw);
        if (frame.type == wire::MessageType::result) {
            const auto result = wire::decode_result(frame);
            if (expected.count(result.task_id)) collected.emplace(result.task_id, result);
            in_flight.erase(result.worker_id);
            assign(result.worker_id);
        } else if (frame.type == wire::MessageType::nack) {
            // worker missed the broadcast: re-sync it and retry the task.
            // Tasks for a version the coordinator does not hold stay
            // unresolved and are reported missing at the deadline.
            const auto nack = wire::decode_nack(frame);
            if (nack.expected_version != impl_->cached_version) continue;
            impl_->inbox[nack.worker_id]->push(impl_->cached_params_frame);
            const auto it = in_flight.find(nack.worker_id);
            if (it != in_flight.end()) {
                impl_->inbox[nack.worker_id]->push(wire::encode_task(it->second));
            }
        }
        // acks from a re-sync are ignored here
    }

    for (auto& [id, result] : collected) outcome.results.push_back(result);
    for (const auto id : expected)
        if (!collected.count(id)) outcome.missing.push_back(id);
    return outcome;
}

// ---------------------------------------------------------------------------
// process pool

namespace {

struct WorkerProc {
    pid_t pid = -1;
    int to_child = -1;    // write end
    int from_child = -1;  // read end
    wire::FrameReader reader;
    bool alive = false;
};

bool write_all(int fd, const std::vector<uint8_t>& bytes) {
    size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        done += static_cast<size_t>(n);
    }
    return true;
}

}  // namespace

struct ProcessWorkerPool::Impl {
    std::vector<WorkerProc> procs;
    double quorum = 1.0;
    std::vector<uint8_t> cached_params_frame;
    uint64_t cached_version = ~0ull;

    void kill_worker(WorkerProc& proc) {
        if (!proc.alive) return;
        proc.alive = false;
        if (proc.to_child >= 0) ::close(proc.to_child);
        if (proc.from_child >= 0) ::close(proc.from_child);
        proc.to_child = proc.from_child = -1;
        if (proc.pid > 0) ::waitpid(proc.pid, nullptr, WNOHANG);
    }

    int live() const {
        int n = 0;
        for (const auto& p : procs) n += p.alive ? 1 : 0;
        return n;
    }

    // waits for one readable worker fd; returns worker index or -1 on timeout
    int poll_readable(Clock::time_point deadline) {
        while (true) {
            std::vector<pollfd> fds;
            std::vector<int> owner;
            for (size_t i = 0; i < procs.size(); ++i) {
                if (!procs[i].alive) continue;
                fds.push_back({procs[i].from_child, POLLIN, 0});
                owner.push_back(static_cast<int>(i));
            }
            if (fds.empty()) throw WorkerPoolFailure("no live workers");
            const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - Clock::now());
            if (remaining.count() <= 0) return -1;
            const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(remaining.count()));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw WorkerPoolFailure(std::string("poll: ") + std::strerror(errno));
            }
            if (rc == 0) return -1;
            for (size_t i = 0; i < fds.size(); ++i)
                if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) return owner[i];
        }
    }

    // drains readable bytes from one worker; false if it hung up
    bool pump(int w, std::vector<std::vector<uint8_t>>& frames) {
        auto& proc = procs[static_cast<size_t>(w)];
        uint8_t buf[65536];
        const ssize_t n = ::read(proc.from_child, buf, sizeof buf);
        if (n < 0) return errno == EINTR;  // retry on the next poll round
        if (n == 0) return false;
        proc.reader.feed(buf, static_cast<size_t>(n));
        while (auto frame = proc.reader.next()) frames.push_back(std::move(*frame));
        return true;
    }
};

ProcessWorkerPool::ProcessWorkerPool(std::vector<std::string> worker_cmd, int workers, double quorum)
    : impl_(std::make_unique<Impl>()) {
    if (workers < 1) throw Error("worker pool needs at least one worker");
    if (worker_cmd.empty()) throw Error("empty worker command");
    ::signal(SIGPIPE, SIG_IGN);  // dead workers surface as write errors instead
    impl_->quorum = quorum;

    for (int i = 0; i < workers; ++i) {
        int down[2], up[2];  // coordinator->worker, worker->coordinator
        if (::pipe(down) != 0 || ::pipe(up) != 0)
            throw WorkerPoolFailure(std::string("pipe: ") + std::strerror(errno));
        const pid_t pid = ::fork();
        if (pid < 0) throw WorkerPoolFailure(std::string("fork: ") + std::strerror(errno));
        if (pid == 0) {
            ::dup2(down[0], STDIN_FILENO);
            ::dup2(up[1], STDOUT_FILENO);
            ::close(down[0]);
            ::close(down[1]);
            ::close(up[0]);
            ::close(up[1]);
            std::vector<std::string> args = worker_cmd;
            args.push_back("--worker-id");
            args.push_back(std::to_string(i));
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            argv.push_back(nullptr);
            ::execv(argv[0], argv.data());
            ::perror("execv");
            ::_exit(127);
        }
        ::close(down[0]);
        ::close(up[1]);
        WorkerProc proc;
        proc.pid = pid;
        proc.to_child = down[1];
        proc.from_child = up[0];
        proc.alive = true;
        impl_->procs.push_back(std::move(proc));
    }
}

ProcessWorkerPool::~ProcessWorkerPool() {
    for (auto& proc : impl_->procs) {
        if (!proc.alive) continue;
        write_all(proc.to_child, wire::encode_shutdown());
        ::close(proc.to_child);
        proc.to_child = -1;
    }
    for (auto& proc : impl_->procs) {
        if (proc.pid > 0) ::waitpid(proc.pid, nullptr, 0);
        if (proc.from_child >= 0) ::close(proc.from_child);
    }
}

int ProcessWorkerPool::worker_count() const { return static_cast<int>(impl_->procs.size()); }
int ProcessWorkerPool::live_workers() const { return impl_->live(); }

int ProcessWorkerPool::broadcast_params(const PolicyParams& params, uint64_t version) {
    impl_->cached_params_frame = wire::encode_params({version, serialize(params)});
    impl_->cached_version = version;
    for (auto& proc : impl_->procs) {
        if (!proc.alive) continue;
        if (!write_all(proc.to_child, impl_->cached_params_frame)) impl_->kill_worker(proc);
    }

    const auto deadline = Clock::now() + std::chrono::seconds(60);
    int acks = 0;
    while (acks < impl_->live()) {
        const int w = impl_->poll_readable(deadline);
        if (w < 0) break;
        std::vector<std::vector<uint8_t>> frames;
        if (!impl_->pump(w, frames)) {
            impl_->kill_worker(impl_->procs[static_cast<size_t>(w)]);
            continue;
        }
        for (const auto& raw : frames) {
            const auto frame = wire::decode_frame(raw);
            if (frame.type == wire::MessageType::params_ack &&
                wire::decode_ack(frame).version == version)
                ++acks;
        }
    }
    const int needed = static_cast<int>(std::ceil(impl_->quorum * worker_count()));
    if (acks < needed)
        throw PartialBroadcast("only " + std::to_string(acks) + " of " +
                               std::to_string(worker_count()) + " workers acknowledged");
    return acks;
}

DispatchOutcome ProcessWorkerPool::dispatch_and_collect(std::span<const TaskMessage> tasks,
                                                        std::chrono::milliseconds timeout) {
    DispatchOutcome outcome;
    std::set<uint64_t> expected;
    for (const auto& t : tasks) expected.insert(t.task_id);

    std::deque<TaskMessage> pending(tasks.begin(), tasks.end());
    std::map<uint64_t, ResultMessage> collected;
    std::map<int, TaskMessage> in_flight;  // worker index -> task
    const auto deadline = Clock::now() + timeout;

    auto assign = [&](int w) {
        if (pending.empty()) return;
        auto& proc = impl_->procs[static_cast<size_t>(w)];
        if (!proc.alive) return;
        const TaskMessage task = pending.front();
        pending.pop_front();
        if (!write_all(proc.to_child, wire::encode_task(task))) {
            impl_->kill_worker(proc);
            pending.push_front(task);
            return;
        }
        in_flight.emplace(w, task);
    };
    auto drop_worker = [&](int w) {
        impl_->kill_worker(impl_->procs[static_cast<size_t>(w)]);
        const auto it = in_flight.find(w);
        if (it != in_flight.end()) {
            pending.push_back(it->second);  // re-dispatch to a survivor
            in_flight.erase(it);
        }
    };

    for (int w = 0; w < worker_count(); ++w)
        if (impl_->procs[static_cast<size_t>(w)].alive) assign(w);

    while (collected.size() < expected.size()) {
        if (impl_->live() == 0) throw WorkerPoolFailure("all workers died");
        const int w = impl_->poll_readable(deadline);
        if (w < 0) {
            outcome.timed_out = true;
            break;
        }
        std::vector<std::vector<uint8_t>> frames;
        if (!impl_->pump(w, frames)) {
            drop_worker(w);
            // idle survivors pick up re-queued work
            for (int v = 0; v < worker_count(); ++v)
                if (impl_->procs[static_cast<size_t>(v)].alive && !in_flight.count(v)) assign(v);
            continue;
        }
        for (const auto& raw : frames) {
            const auto frame = wire::decode_frame(raw);
            if (frame.type == wire::MessageType::result) {
                const auto result = wire::decode_result(frame);
                if (expected.count(result.task_id)) collected.emplace(result.task_id, result);
                in_flight.erase(w);
                assign(w);
            } else if (frame.type == wire::MessageType::nack) {
                const auto nack = wire::decode_nack(frame);
                if (nack.expected_version != impl_->cached_version) continue;
                auto& proc = impl_->procs[static_cast<size_t>(w)];
                if (!write_all(proc.to_child, impl_->cached_params_frame)) {
                    drop_worker(w);
                    continue;
                }
                const auto it = in_flight.find(w);
                if (it != in_flight.end() &&
                    !write_all(proc.to_child, wire::encode_task(it->second)))
                    drop_worker(w);
            }
        }
    }

    for (auto& [id, result] : collected) outcome.results.push_back(result);
    for (const auto id : expected)
        if (!collected.count(id)) outcome.missing.push_back(id);
    return outcome;
}

// ---------------------------------------------------------------------------
// worker side

int run_worker_loop(int in_fd, int out_fd, RolloutBackend& backend, uint32_t worker_id) {
    wire::FrameReader reader;
    std::optional<PolicyParams> params;
    uint64_t held_version = ~0ull;
    auto reply = [&](const std::vector<uint8_t>& frame) {
        if (!write_all(out_fd, frame)) throw IoError("worker: write to coordinator failed");
    };

    uint8_t buf[65536];
    while (true) {
        const ssize_t n = ::read(in_fd, buf, sizeof buf);
        if (n == 0) return 0;  // coordinator hung up
        if (n < 0) {
            if (errno == EINTR) continue;
            return 1;
        }
        reader.feed(buf, static_cast<size_t>(n));
        while (auto raw = reader.next()) {
            if (!handle_frame(*raw, backend, worker_id, params, held_version, reply)) return 0;
        }
    }
}

}  // namespace sas
