#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace anasizer {

/// Seeded random source. All randomness in the library flows through named
/// sub-streams derived from one 64-bit run seed, so every component can be
/// replayed in isolation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for `name` under `seed`.
    static Rng stream(std::uint64_t seed, std::string_view name);
    /// Child stream `name/index`, e.g. one per worker.
    static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index);

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    /// Uniform integer in [lo, hi] (inclusive).
    std::int64_t between(std::int64_t lo, std::int64_t hi);

    std::uint64_t derive_seed() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace anasizer
