#pragma once

#include <array>
#include <cstdint>

namespace lorentz::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Pure function of
/// (counter, key); bit-identical on every platform.
Counter philox4x32(Counter ctr, Key key);

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent child seed for (stream, index). Used to give each path or each
/// particle of a pair its own key.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(seed ^ mix64(stream + 0x1234567ULL)) + index);
}

inline Key key_of(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

/// Stream tags occupying the last counter word; they keep the different uses
/// of one seed disjoint. Changing any of them changes every sampled value.
enum class Tag : std::uint32_t {
    obstacle = 0x0B57AC1Eu,
    boltzmann = 0xB0172AA7u,
    start = 0x57A27000u,
    generic = 0x6E6E7000u,
};

/// Sequential uniforms drawn from a counter-based stream. Copyable; two copies
/// produce the same sequence.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint32_t a, std::uint32_t b, Tag tag)
        : key_(key_of(seed)), a_(a), b_(b), tag_(static_cast<std::uint32_t>(tag)) {}

    /// Next uniform in [0, 1).
    double uniform() {
        if (have_ == 0) refill();
        const double u = to_unit(buf_[4 - have_], buf_[5 - have_]);
        have_ -= 2;
        return u;
    }

    /// Next uniform in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

private:
    void refill() {
        buf_ = philox4x32({a_, b_, block_++, tag_}, key_);
        have_ = 4;
    }

    Key key_;
    std::uint32_t a_;
    std::uint32_t b_;
    std::uint32_t tag_;
    std::uint32_t block_{0};
    Counter buf_{};
    int have_{0};
};

}  // namespace lorentz::rng
