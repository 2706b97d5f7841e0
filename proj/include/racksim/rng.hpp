#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace racksim {

/// SplitMix64 finalizer. Used for stream seeding and for every data-plane hash.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class StreamRole : std::uint8_t {
    Arrivals,
    Service,
    Sampling,
    Loss,
    Hashing,
    Mix,
};

/// A named pseudo-random stream.
///
/// Draw sequences depend only on (seed, role, index). The engine is
/// std::mt19937_64, whose output is fixed by the standard, and all conversions
/// to real or bounded-integer values are done here rather than through the
/// implementation-defined <random> distributions, so sequences are identical
/// across standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t seed, StreamRole role, std::uint64_t index = 0)
        : engine_(mix64(mix64(seed) ^ mix64((static_cast<std::uint64_t>(role) << 32) | index)))
    {
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    bool bernoulli(double p) { return p > 0.0 && uniform01() < p; }

    /// Uniform on [0, n), unbiased (Lemire's multiply-shift with rejection).
    std::uint32_t uniform_index(std::uint32_t n)
    {
        std::uint64_t m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(engine_() >> 32)) * n;
        auto low = static_cast<std::uint32_t>(m);
        if (low < n) {
            const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
            while (low < threshold) {
                m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(engine_() >> 32)) * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace racksim
