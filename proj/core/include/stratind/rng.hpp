#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace stratind {

/// Engine used by the sampler and the MCMC chains.
using Rng = std::mt19937_64;

/// SplitMix64. Cheap to seed, so it backs the per-rollout environment and
/// agent streams where a fresh generator is created for every episode.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Stream tags used when splitting the master seed.
enum class Stream : std::uint64_t {
    Env = 0x656e76,
    Agent = 0x6167656e74,
    Chain = 0x636861696e,
    Value = 0x76616c7565,
    Proposal = 0x70726f70,
};

/// Derives an independent 64-bit seed from a parent seed and a list of
/// indices. Every index is folded through one SplitMix64 round, so the result
/// depends on the order of the indices and on nothing else.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a) noexcept {
    StreamRng g(parent ^ (a * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    g();
    return g();
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, Rest... rest) noexcept {
    return derive_seed(derive_seed(parent, a), static_cast<std::uint64_t>(rest)...);
}

inline std::uint64_t derive_seed(std::uint64_t parent, Stream tag, std::uint64_t index) noexcept {
    return derive_seed(parent, static_cast<std::uint64_t>(tag), index);
}

} // namespace stratind
