#ifndef SAS_TESTS_STUB_BACKEND_HPP
#define SAS_TESTS_STUB_BACKEND_HPP

#include <unistd.h>

#include <cstdint>
#include <vector>

#include "sas/policy.hpp"
#include "sas/rng.hpp"
#include "sas/workers.hpp"

namespace sas::testing {

// flat parameter vector of exactly `dim` entries wrapped in a valid shape
inline PolicyParams flat_params(int dim, double fill = 0.0) {
    PolicyParams params;
    params.shape = PolicyShape{dim - 7, {1, 1, 1}, 1};
    params.theta.assign(static_cast<size_t>(params.shape.param_count()), fill);
    if (static_cast<int>(params.theta.size()) != dim)
        throw std::logic_error("flat_params needs dim >= 8");
    return params;
}

// Black-box objective r(theta) = -||theta + sign*sigma*eps - theta*||^2.
// The standard smooth sanity target for the trainer; no grid involved.
class QuadraticBackend final : public RolloutBackend {
public:
    QuadraticBackend(int dim, uint64_t target_seed, uint32_t worker_id = 0)
        : worker_id_(worker_id) {
        target_.resize(static_cast<size_t>(dim));
        for (size_t i = 0; i < target_.size(); ++i)
            target_[i] = rng::uniform_at(target_seed, i, -1.0, 1.0);
    }

    static constexpr uint32_t kPoisonMaxSteps = 777;  // crashes worker 0, for restart tests

    RolloutStats run(const TaskMessage& task, const PolicyParams& base) override {
        if (task.max_steps == kPoisonMaxSteps && worker_id_ == 0) ::_exit(3);
        double d2 = 0.0;
        for (size_t i = 0; i < target_.size(); ++i) {
            const double perturbed =
                base.theta[i] +
                static_cast<double>(task.sign) * task.sigma * rng::gaussian_at(task.noise_seed, i);
            const double diff = perturbed - target_[i];
            d2 += diff * diff;
        }
        return RolloutStats{-d2, 1, 0.0};
    }

    const std::vector<double>& target() const { return target_; }

private:
    std::vector<double> target_;
    uint32_t worker_id_;
};

// objective that ignores everything: gradient signal must vanish
class ZeroBackend final : public RolloutBackend {
public:
    RolloutStats run(const TaskMessage&, const PolicyParams&) override {
        return RolloutStats{0.0, 1, 0.0};
    }
};

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(d2);
}

}  // namespace sas::testing

#endif
