#include "diffsr/schedule.hpp"

#include <cmath>
#include <limits>

#include "diffsr/error.hpp"

namespace diffsr {

NoiseSchedule make_cosine_schedule(int timesteps) {
    if (timesteps < 1)
        fail(ErrorCategory::usage, "schedule needs at least one timestep");

    NoiseSchedule s;
    s.timesteps = timesteps;
    s.alpha.resize(timesteps + 1);
    s.sigma.resize(timesteps + 1);
    s.snr.resize(timesteps + 1);

    const double half_pi = std::acos(0.0);
    for (int t = 0; t <= timesteps; ++t) {
        const double a = std::cos(half_pi * static_cast<double>(t) / timesteps);
        s.alpha[t] = a;
        s.sigma[t] = std::sqrt(1.0 - a * a);
    }
    // Exact endpoints; cos(pi/2) only reaches ~6e-17 in floating point.
    s.alpha[0] = 1.0;
    s.sigma[0] = 0.0;
    s.alpha[timesteps] = 0.0;
    s.sigma[timesteps] = 1.0;

    s.snr[0] = std::numeric_limits<double>::infinity();
    s.snr[timesteps] = 0.0;
    for (int t = 1; t < timesteps; ++t)
        s.snr[t] = (s.alpha[t] * s.alpha[t]) / (s.sigma[t] * s.sigma[t]);
    return s;
}

TimestepSubsequence subsample_timesteps(const NoiseSchedule& schedule, int inference_steps) {
    const int T = schedule.timesteps;
    if (inference_steps < 1 || inference_steps > T)
        fail(ErrorCategory::usage, "inference_steps must be in 1..T");

    TimestepSubsequence seq;
    seq.steps.reserve(inference_steps);
    for (int i = inference_steps; i >= 1; --i) {
        const int tau = static_cast<int>(std::llround(
            static_cast<double>(i) * T / inference_steps));
        if (seq.steps.empty() || seq.steps.back() != tau)
            seq.steps.push_back(tau);
    }
    return seq;
}

} // namespace diffsr
