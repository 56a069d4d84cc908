#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace lvt {

namespace detail {
// Finalizer of the splitmix64 generator (Steele, Lea & Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based pseudo-random generator. Algorithm: splitmix64; the
/// state advances by the 64-bit golden ratio and each output is mix64 of
/// the counter, so the stream is a pure function of (seed, draw index).
/// Streams are reproducible within this implementation; cross-language
/// ports should match moments, not bits.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return detail::mix64(state_);
    }

    /// Uniform on [0, 1), 53 random mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [-1, 1).
    double next_symmetric() { return 2.0 * next_double() - 1.0; }

    /// Standard normal via Box-Muller; the sine variate is cached so two
    /// uniforms yield two gaussians.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - next_double();  // (0, 1]; keeps log(u1) finite
        double u2 = next_double();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Deterministic per-cell seed: hash-combines coordinates into the base
/// seed so every grid cell owns an independent stream regardless of
/// scheduling or grid shape.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = detail::mix64(base + 0x9E3779B97F4A7C15ull);
    for (std::uint64_t c : coords) {
        h = detail::mix64(h ^ (c + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
    }
    return h;
}

}  // namespace lvt
