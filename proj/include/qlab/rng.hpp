#ifndef QLAB_RNG_HPP
#define QLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace qlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-task stream derivation: the same (master, a, b) always
// yields the same stream, independent of how work is scheduled.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(master ^ splitmix64(a ^ splitmix64(b ^ 0x6a09e667f3bcc909ULL)));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on the open interval (0,1); safe to feed into quantile functions.
    double uniform01() {
        const std::uint64_t x = gen_();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace qlab

#endif
