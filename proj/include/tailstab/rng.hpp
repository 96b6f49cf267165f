#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace tailstab::rng {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Purpose tags for substreams. Each draw in the library is keyed by
/// (master seed, tag, indices...), so a value never depends on which worker
/// produced it or in which order.
enum class Tag : std::uint64_t {
    Innovation = 0x11,
    CoupledInnovation = 0x12,
    Volatility = 0x21,
    CoupledVolatility = 0x22,
    IidSample = 0x31,
    Bootstrap = 0x41,
    Replication = 0x51,
};

/// Counter-based generator: output k is mix64(key + k * gamma).
/// Satisfies UniformRandomBitGenerator, so it can drive <random> distributions.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept;
    Stream(std::uint64_t seed, Tag tag, std::initializer_list<std::uint64_t> ids = {}) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * kGamma);
    }

    /// Uniform double strictly inside (0, 1), 53-bit resolution.
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Signed time index packed for use as a stream id.
constexpr std::uint64_t time_id(long long t) noexcept { return static_cast<std::uint64_t>(t); }

}  // namespace tailstab::rng
