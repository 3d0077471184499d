#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace latgm {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Child seed for stream `index` of `seed`; used for per-replicate seeds and
// for the sub-streams of one replicate.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

// "splitmix64-counter v1": draw k of a stream is mix64(seed + (k+1)*golden).
// Bit-reproducible on every platform; uniform and normal conversions below
// are part of the versioned definition.
class CounterRng {
public:
    static constexpr const char* kName = "splitmix64-counter v1";
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    constexpr std::uint64_t next_u64() noexcept { return mix64(seed_ + (++counter_) * kGolden); }

    // [0, 1), 53-bit resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = -bound % bound;  // 2^64 mod bound
        while (true) {
            const std::uint64_t x = next_u64();
            if (x >= limit) return x % bound;
        }
    }

    // Box-Muller; the second variate of each pair is kept for the next call.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace latgm
