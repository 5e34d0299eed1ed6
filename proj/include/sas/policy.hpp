#ifndef SAS_POLICY_HPP
#define SAS_POLICY_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sas/environment.hpp"

namespace sas {

// Four affine layers: ReLU on the first three, softmax on the last.
struct PolicyShape {
    int input = 0;
    std::array<int, 3> hidden = {256, 128, 64};
    int output = 0;

    bool operator==(const PolicyShape&) const = default;

    int param_count() const {
        int total = 0, fan_in = input;
        for (const int h : hidden) {
            total += (fan_in + 1) * h;
            fan_in = h;
        }
        return total + (fan_in + 1) * output;
    }
};

struct PolicyParams {
    PolicyShape shape;
    std::vector<double> theta;  // layer-major: W row-major then bias, per layer
};

// Weights uniform in +-1/sqrt(fan_in), biases zero; deterministic in seed.
PolicyParams init_policy(const PolicyShape& shape, uint64_t seed);

// Probability vector over the action catalogue. Throws DimensionMismatch.
std::vector<double> forward(const PolicyParams& params, const Observation& obs);

// Indices of the min(k, n) largest probabilities, descending; ties broken
// by lower index.
std::vector<int> top_k(const std::vector<double>& probs, int k);

struct NoiseSample {
    uint64_t seed = 0;
    int8_t sign = 1;  // +1 / -1 for antithetic pairing
};

// The Gaussian vector implied by a seed; element i is a pure function of
// (seed, i), identical on every machine.
std::vector<double> noise_vector(uint64_t seed, size_t n);

// theta + sign * sigma * noise(seed); shapes unchanged.
PolicyParams perturb(const PolicyParams& params, const NoiseSample& noise, double sigma);

// Checkpoint codec: magic, format version, shape header, raw little-endian
// float64 parameters, trailing checksum. Lossless and bitwise-stable.
std::vector<uint8_t> serialize(const PolicyParams& params);
PolicyParams deserialize(const std::vector<uint8_t>& bytes);  // CorruptCheckpoint / VersionMismatch

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::filesystem::path& path);
// Throws VersionMismatch if the checkpoint's shape differs from `expected`.
PolicyParams load_checkpoint(const std::filesystem::path& path, const PolicyShape& expected);

}  // namespace sas

#endif
