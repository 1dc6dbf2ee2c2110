#pragma once

#include <cstdint>
#include <random>

namespace polyrep {

/// Seeded RNG with explicit value mappings. std::uniform_*_distribution output
/// is implementation-defined; these mappings are not, so equal seeds give equal
/// streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t nextU64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
    std::int64_t uniformInt(std::int64_t lo, std::int64_t hi) {
        const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(nextU64()); // full 64-bit span
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t v = nextU64();
        while (v >= limit) v = nextU64();
        return lo + static_cast<std::int64_t>(v % range);
    }

    bool chance(double p) { return uniform() < p; }

    /// Derive an independent stream seed (splitmix64 finalizer over seed ^ stream).
    static std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed ^ (stream + 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace polyrep
