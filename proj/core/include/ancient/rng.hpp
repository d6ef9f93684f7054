#pragma once

#include <cstdint>
#include <random>

namespace ancient {

/// Seeded source of uniform variates.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// maps raw 64-bit words to doubles by hand (53 high bits) so that draws are
/// identical across standard library implementations. The std::*_distribution
/// templates are deliberately not used: their algorithms are unspecified.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    /// Standard normal by Box-Muller (one value per call, the partner is dropped).
    double normal();

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

} // namespace ancient
