#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace opgrowth {

/// Role tags partition the key space so that streams drawn for different
/// purposes never share a counter sequence.
enum class StreamRole : std::uint32_t {
    generic = 0,
    trajectory = 1,
    schedule_permutation = 2,
    schedule_activity = 3,
    state_sample = 4,
    site_choice = 5,
    couplings = 6,
    bootstrap = 7,
};

struct StreamKey {
    StreamRole role = StreamRole::generic;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
};

/// Keyed random stream: (master seed, stream key) is hashed into the state of a
/// xoshiro256++ generator. Identical (seed, key) pairs replay identical
/// sequences; copying a stream copies its position. Branching is done with
/// `derive`, never by sharing a generator between workers.
class RngStream {
  public:
    using result_type = std::uint64_t;

    RngStream() : RngStream(0, StreamKey{}) {}
    RngStream(std::uint64_t master_seed, StreamKey key);

    std::uint64_t master_seed() const noexcept { return seed_; }
    const StreamKey &key() const noexcept { return key_; }

    /// A fresh stream under the same master seed with a different key.
    RngStream derive(StreamKey key) const { return RngStream(seed_, key); }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    /// Unbiased integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept {
        // Lemire's multiply-shift with rejection.
        wide m = static_cast<wide>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<wide>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }
    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t operator()() noexcept { return next_u64(); }
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  private:
    __extension__ typedef unsigned __int128 wide;

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t seed_;
    StreamKey key_;
    std::array<std::uint64_t, 4> s_{};
};

/// splitmix64 finalizer, used to hash stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace opgrowth
