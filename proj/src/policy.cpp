#include "sas/policy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "sas/errors.hpp"
#include "sas/rng.hpp"

namespace sas {

PolicyParams init_policy(const PolicyShape& shape, uint64_t seed) {
    PolicyParams params;
    params.shape = shape;
    params.theta.assign(static_cast<size_t>(shape.param_count()), 0.0);

    size_t offset = 0;
    int fan_in = shape.input;
    int layer = 0;
    auto fill_layer = [&](int fan_out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        const uint64_t layer_seed = rng::derive(seed, 0x1a7e, static_cast<uint64_t>(layer));
        const size_t weights = static_cast<size_t>(fan_in) * static_cast<size_t>(fan_out);
        for (size_t i = 0; i < weights; ++i)
            params.theta[offset + i] = rng::uniform_at(layer_seed, i, -bound, bound);
        offset += weights + static_cast<size_t>(fan_out);  // biases stay zero
        fan_in = fan_out;
        ++layer;
    };
    for (const int h : shape.hidden) fill_layer(h);
    fill_layer(shape.output);
    return params;
}

std::vector<double> forward(const PolicyParams& params, const Observation& obs) {
    const auto& shape = params.shape;
    if (obs.size() != static_cast<size_t>(shape.input))
        throw DimensionMismatch("observation dim " + std::to_string(obs.size()) + ", policy expects " +
                                std::to_string(shape.input));
    if (params.theta.size() != static_cast<size_t>(shape.param_count()))
        throw DimensionMismatch("parameter vector does not match shape");

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), shape.input);

    size_t offset = 0;
    int fan_in = shape.input;
    auto affine = [&](int fan_out, bool relu) {
        const auto w = Eigen::Map<const RowMat>(params.theta.data() + offset, fan_out, fan_in);
        offset += static_cast<size_t>(fan_in) * static_cast<size_t>(fan_out);
        const auto b = Eigen::Map<const Eigen::VectorXd>(params.theta.data() + offset, fan_out);
        offset += static_cast<size_t>(fan_out);
        x = w * x + b;
        if (relu) x = x.cwiseMax(0.0);
        fan_in = fan_out;
    };
    for (const int h : shape.hidden) affine(h, true);
    affine(shape.output, false);

    const double max_logit = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - max_logit).exp();
    e /= e.sum();
    return {e.data(), e.data() + e.size()};
}

std::vector<int> top_k(const std::vector<double>& probs, int k) {
    const int n = static_cast<int>(probs.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const int take = std::min(std::max(k, 0), n);
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](int a, int b) {
        const double pa = probs[static_cast<size_t>(a)], pb = probs[static_cast<size_t>(b)];
        return pa != pb ? pa > pb : a < b;
    });
    order.resize(static_cast<size_t>(take));
    return order;
}

std::vector<double> noise_vector(uint64_t seed, size_t n) {
    std::vector<double> eps(n);
    for (size_t i = 0; i < n; ++i) eps[i] = rng::gaussian_at(seed, i);
    return eps;
}

PolicyParams perturb(const PolicyParams& params, const NoiseSample& noise, double sigma) {
    PolicyParams out = params;
    if (sigma == 0.0) return out;
    const double scale = static_cast<double>(noise.sign) * sigma;
    for (size_t i = 0; i < out.theta.size(); ++i)
        out.theta[i] += scale * rng::gaussian_at(noise.seed, i);
    return out;
}

// ---------------------------------------------------------------------------
// checkpoint codec

namespace {

constexpr char kMagic[4] = {'G', 'S', 'P', '1'};
constexpr uint32_t kFormatVersion = 1;

uint64_t fnv1a(const uint8_t* data, size_t n) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

template <typename T>
void put(std::vector<uint8_t>& out, T value) {
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));  // little-endian host assumed
}

template <typename T>
T take(const std::vector<uint8_t>& in, size_t& offset) {
    if (offset + sizeof(T) > in.size()) throw CorruptCheckpoint("checkpoint truncated");
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

}  // namespace

std::vector<uint8_t> serialize(const PolicyParams& params) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put<uint32_t>(out, kFormatVersion);
    put<uint32_t>(out, static_cast<uint32_t>(params.shape.input));
    for (const int h : params.shape.hidden) put<uint32_t>(out, static_cast<uint32_t>(h));
    put<uint32_t>(out, static_cast<uint32_t>(params.shape.output));
    put<uint64_t>(out, static_cast<uint64_t>(params.theta.size()));
    const size_t payload_start = out.size();
    for (const double v : params.theta) put<double>(out, v);
    put<uint64_t>(out, fnv1a(out.data() + payload_start, out.size() - payload_start));
    return out;
}

PolicyParams deserialize(const std::vector<uint8_t>& bytes) {
    size_t offset = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw CorruptCheckpoint("bad checkpoint magic");
    offset = 4;
    const auto version = take<uint32_t>(bytes, offset);
    if (version != kFormatVersion)
        throw VersionMismatch("checkpoint format version " + std::to_string(version));

    PolicyParams params;
    params.shape.input = static_cast<int>(take<uint32_t>(bytes, offset));
    for (auto& h : params.shape.hidden) h = static_cast<int>(take<uint32_t>(bytes, offset));
    params.shape.output = static_cast<int>(take<uint32_t>(bytes, offset));
    const auto count = take<uint64_t>(bytes, offset);
    if (count != static_cast<uint64_t>(params.shape.param_count()))
        throw CorruptCheckpoint("parameter count does not match shape header");

    const size_t payload_start = offset;
    params.theta.resize(count);
    for (auto& v : params.theta) v = take<double>(bytes, offset);
    const size_t payload_end = offset;
    const auto checksum = take<uint64_t>(bytes, offset);
    if (checksum != fnv1a(bytes.data() + payload_start, payload_end - payload_start))
        throw CorruptCheckpoint("checkpoint checksum mismatch");
    if (offset != bytes.size()) throw CorruptCheckpoint("trailing bytes after checkpoint");
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params) {
    const auto bytes = serialize(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write on checkpoint " + path.string());
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

PolicyParams load_checkpoint(const std::filesystem::path& path, const PolicyShape& expected) {
    PolicyParams params = load_checkpoint(path);
    if (!(params.shape == expected))
        throw VersionMismatch("checkpoint shape does not match the current policy");
    return params;
}

}  // namespace sas
