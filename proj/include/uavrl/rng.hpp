#pragma once

#include <cstdint>
#include <random>

namespace uavrl {

// Mixes a 64-bit value into a well-distributed one (splitmix64 finalizer).
// Used to derive independent stream seeds from one base seed.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base ^ mix64(stream + 0x51ed270b0a1b2c3dULL));
}

// Seeded generator with hand-rolled draw helpers so results do not depend
// on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), n > 0
    int uniform_int(int n) {
        const auto wide = static_cast<unsigned __int128>(gen_());
        return static_cast<int>((wide * static_cast<unsigned __int128>(n)) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

}  // namespace uavrl
