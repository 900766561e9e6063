#pragma once

// Counter-based random streams. A stream is addressed by (master seed,
// stream id); the k-th draw is a pure function of (key, k), so streams are
// reproducible regardless of which thread consumes them and in what order.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace covwalk::random {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

class Stream {
public:
    using result_type = std::uint64_t;

    constexpr Stream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
        : key_(mix64(master_seed ^ mix64(stream_id * kGolden + 0x632BE59BD9B4E019ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return mix64(key_ + (++counter_) * kGolden); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe to pass to log.
    double uniform_positive() noexcept { return static_cast<double>(((*this)() >> 11U) + 1U) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double exponential(double rate = 1.0) noexcept { return -std::log(uniform_positive()) / rate; }

    /// Standard normal via Box-Muller (one draw discarded for simplicity).
    double normal() noexcept {
        const double r = std::sqrt(-2.0 * std::log(uniform_positive()));
        return r * std::cos(2.0 * std::numbers::pi * uniform());
    }

    /// Standard Cauchy by inverse CDF.
    double cauchy() noexcept { return std::tan(std::numbers::pi * (uniform_positive() - 0.5)); }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace covwalk::random
