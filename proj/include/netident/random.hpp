#pragma once

// Portable deterministic random source. std::uniform_real_distribution is
// implementation-defined, so draws are derived from SplitMix64 bits directly
// to keep reports byte-identical across standard libraries.

#include <cstdint>

namespace netident {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double next_uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }

    /// Uniform on [0, bound) by rejection, bound > 0.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % bound;
    }

    /// Independent stream for the index-th sample of a run seeded with `seed`.
    /// Streams do not depend on evaluation order.
    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) noexcept {
        SplitMix64 mixer(seed);
        const std::uint64_t base = mixer.next();
        SplitMix64 keyed(base ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
        return SplitMix64(keyed.next());
    }

private:
    std::uint64_t state_;
};

}  // namespace netident
