#pragma once

#include <cstdint>
#include <vector>

namespace diffsr {

// Counter-based generator: SplitMix64 evaluated at an explicit counter.
//
//   value(key, n) = mix64(key + (n + 1) * 0x9E3779B97F4A7C15)
//   mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//             z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//
// The same (key, counter) yields the same value on every platform; all
// randomness in this project flows through this generator so results are
// reproducible from a single seed.
//
// Derived quantities (also pinned):
//   uniform in [0,1):    (value >> 11) * 2^-53
//   normal (Box-Muller): consumes exactly two consecutive uniforms u1, u2 and
//                        returns sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine
//                        pair member is discarded, so every normal advances
//                        the counter by exactly 2.
//   fork(tag):           child key = mix64(key + (tag + 1) * 0xC2B2AE3D27D4EB4F),
//                        an independent stream per tag.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return value_at(key_, counter_++); }
    double next_unit();
    double next_normal();
    // Uniform integer in [1, n] via modulo (bias is < n / 2^64).
    int next_int_1_to(int n);

    Rng fork(std::uint64_t tag) const;

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix64(std::uint64_t z);
    static std::uint64_t value_at(std::uint64_t key, std::uint64_t counter);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// A reproducible standard-normal field: eps holds count values generated by
// Rng(fork of base at draw_index). The (key, draw_index, shape) triple fully
// determines the bytes of eps.
struct NoiseDraw {
    std::uint64_t key = 0;        // parent stream key
    std::uint64_t draw_index = 0; // which draw in the parent's lineage
    std::vector<double> eps;
};

NoiseDraw make_noise_draw(const Rng& base, std::uint64_t draw_index, std::size_t count);

} // namespace diffsr
