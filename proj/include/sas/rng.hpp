#ifndef SAS_RNG_HPP
#define SAS_RNG_HPP

#include <cmath>
#include <cstdint>

// Counter-based random streams. Every draw is a pure function of
// (seed, index), so a noise vector can be reconstructed anywhere from
// its seed alone and random access is O(1). No generator state is
// shared between components or threads.

namespace sas::rng {

inline constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// i-th 64-bit word of the stream identified by `seed`
inline uint64_t bits_at(uint64_t seed, uint64_t i) {
    return mix(seed + (i + 1) * kGamma);
}

// combine seeds/ids into a derived stream seed
inline uint64_t derive(uint64_t seed, uint64_t salt) {
    return mix(seed ^ (salt + kGamma + (seed << 6) + (seed >> 2)));
}

inline uint64_t derive(uint64_t seed, uint64_t a, uint64_t b) {
    return derive(derive(seed, a), b);
}

// uniform in (0, 1); never returns exactly 0 or 1
inline double uniform01_at(uint64_t seed, uint64_t i) {
    return (static_cast<double>(bits_at(seed, i) >> 11) + 0.5) * 0x1.0p-53;
}

// uniform in [lo, hi)
inline double uniform_at(uint64_t seed, uint64_t i, double lo, double hi) {
    return lo + (hi - lo) * uniform01_at(seed, i);
}

// standard normal via Box-Muller; draw i consumes uniforms 2i and 2i+1
inline double gaussian_at(uint64_t seed, uint64_t i) {
    const double u1 = uniform01_at(seed, 2 * i);
    const double u2 = uniform01_at(seed, 2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// integer in [0, n)
inline uint64_t below_at(uint64_t seed, uint64_t i, uint64_t n) {
    return bits_at(seed, i) % n;
}

// Sequential convenience wrapper over the counter stream.
class Stream {
public:
    explicit Stream(uint64_t seed) : seed_(seed) {}

    uint64_t bits() { return bits_at(seed_, next_++); }
    double uniform01() { return uniform01_at(seed_, next_++); }
    double uniform(double lo, double hi) { return uniform_at(seed_, next_++, lo, hi); }
    double gaussian() { return gaussian_at(seed_, next_++); }
    uint64_t below(uint64_t n) { return below_at(seed_, next_++, n); }
    int poisson(double lambda) {
        // inversion by sequential search; fine for small lambda
        const double l = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > l);
        return k - 1;
    }

private:
    uint64_t seed_;
    uint64_t next_ = 0;
};

}  // namespace sas::rng

#endif
