#pragma once

// Deterministic random streams.
//
// Algorithm, fixed for the lifetime of the repository:
//   key   = splitmix64(master_seed) ^ splitmix64(stream_id ^ 0xD1B54A32D192ED03)
//   state = four consecutive splitmix64 outputs starting from `key`
//   draws = xoshiro256** over that state
// Exponential variates use Boost.Random's ziggurat exponential_distribution,
// whose implementation is header code and therefore identical on every
// platform (unlike the std:: distributions).

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>

namespace ssepwalk {

struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

// Walk streams live above 2^32 so they never collide with environment streams.
inline constexpr std::uint64_t kWalkStreamBase = std::uint64_t{1} << 32;

inline SeedSpec environment_seed(std::uint64_t master, std::uint64_t env_index) {
    return {master, env_index};
}
inline SeedSpec walk_seed(std::uint64_t master, std::uint64_t walk_index) {
    return {master, kWalkStreamBase + walk_index};
}

namespace detail {

inline constexpr std::uint64_t splitmix64_step(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t splitmix64_hash(std::uint64_t x) noexcept {
    return splitmix64_step(x);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256** keyed by a SeedSpec. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(SeedSpec seed) : seed_(seed) {
        std::uint64_t key = detail::splitmix64_hash(seed.master_seed) ^
                            detail::splitmix64_hash(seed.stream_id ^ 0xD1B54A32D192ED03ULL);
        for (auto& word : state_) word = detail::splitmix64_step(key);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by multiply-shift; bias <= n / 2^64, zero for powers of two.
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

    // Exp(1) variate.
    double exponential() { return exp_(*this); }

    bool coin() noexcept { return ((*this)() >> 63) != 0; }

    const SeedSpec& seed() const noexcept { return seed_; }

private:
    SeedSpec seed_;
    std::array<std::uint64_t, 4> state_{};
    boost::random::exponential_distribution<double> exp_{1.0};
};

inline RandomStream derive_stream(SeedSpec seed) { return RandomStream(seed); }

}  // namespace ssepwalk
