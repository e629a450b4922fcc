#pragma once

#include <cstdint>

#include "adaptrial/special.hpp"

namespace adaptrial::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key of sub-stream `index` under `seed`. Used to give every replication
/// (and every live trial) its own stream independent of scheduling order.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index)
{
    return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based stream: draw k is mix64(key + (k + 1) * gamma). The state is
/// just (key, counter), so a stream can be positioned anywhere in O(1).
class CounterStream {
public:
    explicit CounterStream(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter)
    {
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t position() const { return counter_; }
    void seek(std::uint64_t counter) { counter_ = counter; }

    std::uint64_t next_u64()
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by inversion, so one normal always consumes exactly one draw.
    double normal() { return special::std_normal_quantile(uniform_open()); }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace adaptrial::rng
