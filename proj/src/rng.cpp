#include "diffsr/rng.hpp"

#include <cmath>

namespace diffsr {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kForkGamma = 0xC2B2AE3D27D4EB4Full;
constexpr double kTwoPi = 6.283185307179586476925286766559;
} // namespace

std::uint64_t Rng::mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

std::uint64_t Rng::value_at(std::uint64_t key, std::uint64_t counter) {
    return mix64(key + (counter + 1) * kGoldenGamma);
}

double Rng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    // 1 - u1 lies in (0, 1], so the log argument is never zero.
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(kTwoPi * u2);
}

int Rng::next_int_1_to(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)) + 1;
}

Rng Rng::fork(std::uint64_t tag) const {
    return Rng(mix64(key_ + (tag + 1) * kForkGamma));
}

NoiseDraw make_noise_draw(const Rng& base, std::uint64_t draw_index, std::size_t count) {
    NoiseDraw d;
    d.key = base.key();
    d.draw_index = draw_index;
    Rng r = base.fork(draw_index);
    d.eps.resize(count);
    for (double& e : d.eps) e = r.next_normal();
    return d;
}

} // namespace diffsr
