#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace isgd {

/// xoshiro256** seeded through splitmix64.
///
/// Every derived quantity (uniform doubles, bounded integers, normals) is
/// computed here with fixed integer arithmetic, so a given seed produces the
/// same stream on every platform and standard library. Satisfies
/// UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Unbiased integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal deviate (Marsaglia polar method).
    double normal();

    const std::array<std::uint64_t, 4>& state() const { return state_; }

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t value);

}  // namespace isgd
