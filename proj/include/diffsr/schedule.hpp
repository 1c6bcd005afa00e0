#pragma once

#include <vector>

namespace diffsr {

// Precomputed cosine noise schedule over t = 0..T:
//   alpha[t] = cos(0.5 * pi * t / T)
//   sigma[t] = sqrt(1 - alpha[t]^2)
//   snr[t]   = alpha[t]^2 / sigma[t]^2   (+inf at t=0, 0 at t=T)
//
// Tables are built once and never mutated, so the trainer and the sampler
// read identical values and the struct is safe for concurrent reads.
struct NoiseSchedule {
    int timesteps = 0; // T
    std::vector<double> alpha; // size T+1
    std::vector<double> sigma; // size T+1
    std::vector<double> snr;   // size T+1

    bool contains(int t) const { return t >= 0 && t <= timesteps; }
};

NoiseSchedule make_cosine_schedule(int timesteps);

// Strictly decreasing inference timesteps tau_S > ... > tau_1, each in 1..T,
// with an implicit final target of 0. steps.front() == T.
struct TimestepSubsequence {
    std::vector<int> steps;
};

// Evenly spaced subsequence tau_i = round(i * T / S) for i = S..1.
// When T is a multiple of S the result has exactly S entries; otherwise
// rounding collisions are deduplicated and the sequence may be shorter.
TimestepSubsequence subsample_timesteps(const NoiseSchedule& schedule, int inference_steps);

} // namespace diffsr
